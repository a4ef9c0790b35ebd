#include "nltv/nltv.h"

#include <memory>
#include <new>
#include <string>

#include "nltv/cluster.hpp"
#include "nltv/graph.hpp"
#include "nltv/hsi.hpp"
#include "nltv/metrics.hpp"
#include "nltv/pdhg.hpp"
#include "nltv/synth.hpp"

struct nltv_cube { nltv::HsiCube v; };
struct nltv_truth { nltv::GroundTruth v; };
struct nltv_labels { nltv::LabelMap v; };
struct nltv_matrix { nltv::Matrix v; };
struct nltv_graph { nltv::NonlocalGraph v; };
struct nltv_result { nltv::ClusterResult v; };
struct nltv_report {
    nltv::EvalReport v;
    std::string json;
    std::string confusion;
};

namespace {

thread_local std::string last_error;

nltv_status to_status(nltv::ErrorKind kind) {
    switch (kind) {
        case nltv::ErrorKind::InvalidArgument: return NLTV_ERR_INVALID_ARGUMENT;
        case nltv::ErrorKind::Io: return NLTV_ERR_IO;
        case nltv::ErrorKind::Format: return NLTV_ERR_FORMAT;
        case nltv::ErrorKind::Numeric: return NLTV_ERR_NUMERIC;
    }
    return NLTV_ERR_INTERNAL;
}

template <class F>
nltv_status guard(F&& body) {
    try {
        body();
        last_error.clear();
        return NLTV_OK;
    } catch (const nltv::Error& e) {
        last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return NLTV_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return NLTV_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) nltv::fail(nltv::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

template <class Handle, class Value>
void emit(Handle** out, Value&& value) {
    *out = new Handle{std::forward<Value>(value)};
}

nltv::PatchConfig to_cpp(const nltv_patch_config& c) {
    nltv::PatchConfig p;
    p.patch_radius = c.patch_radius;
    p.m = c.m;
    p.sigma = c.sigma;
    p.binarize = c.binarize != 0;
    p.normalize_spectra = c.normalize_spectra != 0;
    p.ann_trees = c.ann_trees;
    p.ann_checks = c.ann_checks;
    p.seed = c.seed;
    return p;
}

nltv::SolverConfig to_cpp(const nltv_solver_config& c) {
    nltv::SolverConfig s;
    s.tau = c.tau;
    s.sigma = c.sigma;
    s.theta = c.theta;
    s.max_iters = c.max_iters;
    s.rel_tol = c.rel_tol;
    s.auto_steps = c.auto_steps != 0;
    s.randomize_dual = c.randomize_dual != 0;
    s.seed = c.seed;
    return s;
}

nltv::ClusterConfig to_cpp(const nltv_cluster_config& c) {
    nltv::ClusterConfig k;
    k.k = c.k;
    if (!c.auto_lambda) k.lambda = c.lambda;
    if (!c.auto_mu) k.mu = c.mu;
    switch (c.model) {
        case NLTV_MODEL_LINEAR: k.model = nltv::Model::Linear; break;
        case NLTV_MODEL_QUADRATIC: k.model = nltv::Model::Quadratic; break;
        default: nltv::fail(nltv::ErrorKind::InvalidArgument, "unknown model");
    }
    switch (c.init) {
        case NLTV_INIT_RANDOM: k.init = nltv::InitMethod::Random; break;
        case NLTV_INIT_KMEANSPP: k.init = nltv::InitMethod::KMeansPlusPlus; break;
        case NLTV_INIT_KMEANS: k.init = nltv::InitMethod::KMeans; break;
        case NLTV_INIT_EXTERNAL: k.init = nltv::InitMethod::External; break;
        default: nltv::fail(nltv::ErrorKind::InvalidArgument, "unknown init method");
    }
    k.outer_max = c.outer_max;
    k.outer_tol = c.outer_tol;
    k.eta = c.eta;
    k.grid_h = c.grid_h;
    k.band_eps = c.band_eps;
    k.seed = c.seed;
    return k;
}

}  // namespace

extern "C" {

const char* nltv_version(void) { return "1.0.0"; }

const char* nltv_status_string(nltv_status status) {
    switch (status) {
        case NLTV_OK: return "ok";
        case NLTV_ERR_INVALID_ARGUMENT: return "invalid argument";
        case NLTV_ERR_IO: return "i/o error";
        case NLTV_ERR_FORMAT: return "format error";
        case NLTV_ERR_NUMERIC: return "numeric error";
        case NLTV_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* nltv_last_error(void) { return last_error.c_str(); }

// cubes

nltv_status nltv_cube_create(size_t rows, size_t cols, size_t bands, const float* data, nltv_cube** out) {
    return guard([&] {
        need(data, "data");
        need(out, "out");
        emit(out, nltv::HsiCube(rows, cols, bands, std::vector<float>(data, data + rows * cols * bands)));
    });
}

nltv_status nltv_cube_load(const char* data_path, const char* header_path, nltv_cube** out) {
    return guard([&] {
        need(data_path, "data_path");
        need(header_path, "header_path");
        need(out, "out");
        emit(out, nltv::load_cube(data_path, header_path));
    });
}

nltv_status nltv_cube_save(const nltv_cube* cube, const char* data_path, const char* header_path) {
    return guard([&] {
        need(cube, "cube");
        need(data_path, "data_path");
        need(header_path, "header_path");
        nltv::save_cube(cube->v, data_path, header_path);
    });
}

nltv_status nltv_cube_shape(const nltv_cube* cube, size_t* rows, size_t* cols, size_t* bands) {
    return guard([&] {
        need(cube, "cube");
        if (rows) *rows = cube->v.rows();
        if (cols) *cols = cube->v.cols();
        if (bands) *bands = cube->v.bands();
    });
}

const float* nltv_cube_data(const nltv_cube* cube) { return cube ? cube->v.data().data() : nullptr; }

void nltv_cube_free(nltv_cube* cube) { delete cube; }

// matrices

nltv_status nltv_matrix_create(size_t rows, size_t cols, const double* data, nltv_matrix** out) {
    return guard([&] {
        need(out, "out");
        if (rows * cols > 0) need(data, "data");
        emit(out, nltv::Matrix(rows, cols, std::vector<double>(data, data + rows * cols)));
    });
}

nltv_status nltv_matrix_load_csv(const char* path, nltv_matrix** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        emit(out, nltv::load_matrix_csv(path));
    });
}

nltv_status nltv_matrix_save_csv(const nltv_matrix* m, const char* path) {
    return guard([&] {
        need(m, "matrix");
        need(path, "path");
        nltv::save_matrix_csv(m->v, path);
    });
}

nltv_status nltv_matrix_shape(const nltv_matrix* m, size_t* rows, size_t* cols) {
    return guard([&] {
        need(m, "matrix");
        if (rows) *rows = m->v.rows();
        if (cols) *cols = m->v.cols();
    });
}

const double* nltv_matrix_data(const nltv_matrix* m) { return m ? m->v.data().data() : nullptr; }

void nltv_matrix_free(nltv_matrix* m) { delete m; }

// ground truth

nltv_status nltv_truth_load(const char* path, size_t expected_pixels, nltv_truth** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        emit(out, nltv::load_ground_truth(path, expected_pixels));
    });
}

nltv_status nltv_truth_save(const nltv_truth* truth, const char* path) {
    return guard([&] {
        need(truth, "truth");
        need(path, "path");
        nltv::save_ground_truth(truth->v, path);
    });
}

size_t nltv_truth_size(const nltv_truth* truth) { return truth ? truth->v.labels.size() : 0; }

nltv_status nltv_truth_labels(const nltv_truth* truth, int32_t* out, size_t n) {
    return guard([&] {
        need(truth, "truth");
        need(out, "out");
        nltv::require(n == truth->v.labels.size(), "label buffer size mismatch");
        for (size_t i = 0; i < n; ++i) {
            const auto& l = truth->v.labels[i];
            out[i] = l ? static_cast<int32_t>(*l) : -1;
        }
    });
}

void nltv_truth_free(nltv_truth* truth) { delete truth; }

// label maps

nltv_status nltv_labels_create(size_t rows, size_t cols, size_t k, const uint32_t* assignment, nltv_labels** out) {
    return guard([&] {
        need(out, "out");
        if (rows * cols > 0) need(assignment, "assignment");
        emit(out, nltv::LabelMap(rows, cols, k, std::vector<uint32_t>(assignment, assignment + rows * cols)));
    });
}

nltv_status nltv_labels_load(const char* csv_path, size_t k, nltv_labels** out) {
    return guard([&] {
        need(csv_path, "csv_path");
        need(out, "out");
        emit(out, nltv::load_label_map(csv_path, k));
    });
}

nltv_status nltv_labels_save(const nltv_labels* labels, const char* csv_path, const char* png_path) {
    return guard([&] {
        need(labels, "labels");
        if (labels->v.assignment.empty()) nltv::fail(nltv::ErrorKind::InvalidArgument, "empty label map");
        if (csv_path) nltv::save_label_csv(labels->v, csv_path);
        if (png_path) nltv::save_label_png(labels->v, png_path);
    });
}

nltv_status nltv_labels_shape(const nltv_labels* labels, size_t* rows, size_t* cols, size_t* k) {
    return guard([&] {
        need(labels, "labels");
        if (rows) *rows = labels->v.rows;
        if (cols) *cols = labels->v.cols;
        if (k) *k = labels->v.k;
    });
}

const uint32_t* nltv_labels_data(const nltv_labels* labels) {
    return labels ? labels->v.assignment.data() : nullptr;
}

void nltv_labels_free(nltv_labels* labels) { delete labels; }

// synthetic scenes

void nltv_gbm_config_default(nltv_gbm_config* cfg) {
    if (!cfg) return;
    const nltv::GbmConfig d;
    *cfg = {d.p, d.bands, d.rows, d.cols, d.snr_db, d.smoothness, d.mixing_scale, d.reflectance_scale,
            d.gamma_seed, d.field_seed, d.noise_seed, d.endmember_seed, d.add_noise ? 1 : 0};
}

nltv_status nltv_synth_generate(const nltv_gbm_config* cfg, const nltv_matrix* endmembers, nltv_cube** cube,
                                nltv_truth** truth, nltv_matrix** endmembers_out, nltv_matrix** abundances_out) {
    return guard([&] {
        need(cfg, "cfg");
        nltv::GbmConfig g;
        g.p = cfg->p;
        g.bands = cfg->bands;
        g.rows = cfg->rows;
        g.cols = cfg->cols;
        g.snr_db = cfg->snr_db;
        g.smoothness = cfg->smoothness;
        g.mixing_scale = cfg->mixing_scale;
        g.reflectance_scale = cfg->reflectance_scale;
        g.gamma_seed = cfg->gamma_seed;
        g.field_seed = cfg->field_seed;
        g.noise_seed = cfg->noise_seed;
        g.endmember_seed = cfg->endmember_seed;
        g.add_noise = cfg->add_noise != 0;
        auto scene = nltv::generate_scene(g, endmembers ? &endmembers->v : nullptr);
        // Allocate everything before publishing so a failure leaks nothing.
        auto c = std::make_unique<nltv_cube>(nltv_cube{std::move(scene.cube)});
        auto t = std::make_unique<nltv_truth>(nltv_truth{std::move(scene.truth)});
        auto e = std::make_unique<nltv_matrix>(nltv_matrix{std::move(scene.endmembers)});
        auto a = std::make_unique<nltv_matrix>(nltv_matrix{std::move(scene.abundances)});
        if (cube) *cube = c.release();
        if (truth) *truth = t.release();
        if (endmembers_out) *endmembers_out = e.release();
        if (abundances_out) *abundances_out = a.release();
    });
}

// graphs

void nltv_patch_config_default(nltv_patch_config* cfg) {
    if (!cfg) return;
    const nltv::PatchConfig d;
    *cfg = {d.patch_radius, d.m, d.sigma, d.binarize ? 1 : 0, d.normalize_spectra ? 1 : 0,
            d.ann_trees, d.ann_checks, d.seed};
}

nltv_status nltv_patch_distance(const nltv_cube* cube, size_t i, size_t j, const nltv_patch_config* cfg,
                                double* out) {
    return guard([&] {
        need(cube, "cube");
        need(cfg, "cfg");
        need(out, "out");
        nltv::require(i < cube->v.pixels() && j < cube->v.pixels(), "pixel index out of range");
        *out = nltv::patch_distance(cube->v, i, j, to_cpp(*cfg));
    });
}

nltv_status nltv_graph_build(const nltv_cube* cube, const nltv_patch_config* cfg, nltv_graph** out) {
    return guard([&] {
        need(cube, "cube");
        need(cfg, "cfg");
        need(out, "out");
        emit(out, nltv::build_graph(cube->v, to_cpp(*cfg)));
    });
}

nltv_status nltv_graph_load(const char* path, nltv_graph** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        emit(out, nltv::load_graph(path));
    });
}

nltv_status nltv_graph_save(const nltv_graph* graph, const char* path) {
    return guard([&] {
        need(graph, "graph");
        need(path, "path");
        nltv::save_graph(graph->v, path);
    });
}

nltv_status nltv_graph_info(const nltv_graph* graph, size_t* pixels, size_t* m, double* operator_norm) {
    return guard([&] {
        need(graph, "graph");
        if (pixels) *pixels = graph->v.pixels();
        if (m) *m = graph->v.m();
        if (operator_norm) *operator_norm = graph->v.operator_norm();
    });
}

nltv_status nltv_graph_row(const nltv_graph* graph, size_t i, uint32_t* targets, double* weights) {
    return guard([&] {
        need(graph, "graph");
        nltv::require(i < graph->v.pixels(), "pixel index out of range");
        const size_t m = graph->v.m();
        for (size_t s = 0; s < m; ++s) {
            if (targets) targets[s] = graph->v.targets()[i * m + s];
            if (weights) weights[s] = graph->v.weights()[i * m + s];
        }
    });
}

void nltv_graph_free(nltv_graph* graph) { delete graph; }

// clustering

void nltv_solver_config_default(nltv_solver_config* cfg) {
    if (!cfg) return;
    const nltv::SolverConfig d;
    *cfg = {d.tau, d.sigma, d.theta, d.max_iters, d.rel_tol, d.auto_steps ? 1 : 0, d.randomize_dual ? 1 : 0, d.seed};
}

void nltv_cluster_config_default(nltv_cluster_config* cfg) {
    if (!cfg) return;
    const nltv::ClusterConfig d;
    *cfg = {d.k, 1, 0.0, 1, 0.0, NLTV_MODEL_QUADRATIC, NLTV_INIT_KMEANSPP, d.outer_max, d.outer_tol,
            d.eta, d.grid_h, d.band_eps, d.seed};
}

nltv_status nltv_initial_centroids(const nltv_cube* cube, const nltv_cluster_config* cfg, double mu,
                                   const nltv_matrix* external, nltv_matrix** out) {
    return guard([&] {
        need(cube, "cube");
        need(cfg, "cfg");
        need(out, "out");
        const auto c = to_cpp(*cfg);
        c.validate();
        emit(out, nltv::initial_centroids(cube->v, c, mu, external ? &external->v : nullptr));
    });
}

nltv_status nltv_auto_params(const nltv_cube* cube, const nltv_graph* graph, const nltv_matrix* centroids,
                             double fixed_mu, double* lambda, double* mu, int* fallback) {
    return guard([&] {
        need(cube, "cube");
        need(graph, "graph");
        need(centroids, "centroids");
        std::optional<double> fm;
        if (fixed_mu >= 0.0) fm = fixed_mu;
        const auto p = nltv::auto_params(cube->v, graph->v, centroids->v, fm);
        if (lambda) *lambda = p.lambda;
        if (mu) *mu = p.mu;
        if (fallback) *fallback = p.fallback ? 1 : 0;
    });
}

nltv_status nltv_cluster(const nltv_cube* cube, const nltv_graph* graph, const nltv_cluster_config* ccfg,
                         const nltv_solver_config* scfg, const nltv_matrix* external_centroids, nltv_result** out) {
    return guard([&] {
        need(cube, "cube");
        need(graph, "graph");
        need(ccfg, "cluster config");
        need(scfg, "solver config");
        need(out, "out");
        emit(out, nltv::run_clustering(cube->v, graph->v, to_cpp(*ccfg), to_cpp(*scfg),
                                       external_centroids ? &external_centroids->v : nullptr));
    });
}

nltv_status nltv_result_labels(const nltv_result* result, nltv_labels** out) {
    return guard([&] {
        need(result, "result");
        need(out, "out");
        emit(out, result->v.labels);
    });
}

nltv_status nltv_result_centroids(const nltv_result* result, nltv_matrix** out) {
    return guard([&] {
        need(result, "result");
        need(out, "out");
        emit(out, result->v.centroids);
    });
}

nltv_status nltv_result_params(const nltv_result* result, double* lambda, double* mu) {
    return guard([&] {
        need(result, "result");
        if (lambda) *lambda = result->v.lambda;
        if (mu) *mu = result->v.mu;
    });
}

size_t nltv_result_history_size(const nltv_result* result) { return result ? result->v.history.size() : 0; }

nltv_status nltv_result_history(const nltv_result* result, size_t index, nltv_outer_record* out) {
    return guard([&] {
        need(result, "result");
        need(out, "out");
        nltv::require(index < result->v.history.size(), "history index out of range");
        const auto& h = result->v.history[index];
        *out = {h.outer_iter, h.inner_iters, h.energy, h.changed_fraction};
    });
}

void nltv_result_free(nltv_result* result) { delete result; }

// evaluation

nltv_status nltv_evaluate(const nltv_labels* labels, const nltv_truth* truth, const char* merges,
                          nltv_report** out) {
    return guard([&] {
        need(labels, "labels");
        need(truth, "truth");
        need(out, "out");
        const auto m = merges ? nltv::parse_merges(merges) : nltv::ClassMerges{};
        auto rep = nltv::overall_accuracy(labels->v, truth->v, m);
        auto h = std::make_unique<nltv_report>();
        h->json = rep.to_json();
        h->confusion = rep.confusion_csv();
        h->v = std::move(rep);
        *out = h.release();
    });
}

double nltv_report_accuracy(const nltv_report* report) { return report ? report->v.overall_accuracy : 0.0; }

const char* nltv_report_json(const nltv_report* report) { return report ? report->json.c_str() : ""; }

const char* nltv_report_confusion_csv(const nltv_report* report) {
    return report ? report->confusion.c_str() : "";
}

void nltv_report_free(nltv_report* report) { delete report; }

}  // extern "C"

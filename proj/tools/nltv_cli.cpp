// nltv: command-line front end over the C API.
//
//   nltv synth   --out DIR [--p 5 --bands 162 --rows 200 --cols 200 --snr 30]
//   nltv graph   --cube DIR/cube.f32 --out DIR [--m 10 --radius 1]
//   nltv cluster --cube ... --graph DIR/graph.bin --k 5 --out DIR
//   nltv eval    --labels labels.csv --truth truth.csv [--merge 1+2]
//   nltv render  --labels labels.csv --png labels.png
//   nltv sweep   --cube ... --graph ... --truth ... --k 5 --out DIR
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nltv/nltv.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string message;
};

int exit_code(nltv_status s) { return s == NLTV_ERR_INVALID_ARGUMENT ? 1 : 2; }

void check(nltv_status s) {
    if (s != NLTV_OK) throw CliError{exit_code(s), nltv_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Cube = std::unique_ptr<nltv_cube, Deleter<nltv_cube, nltv_cube_free>>;
using Truth = std::unique_ptr<nltv_truth, Deleter<nltv_truth, nltv_truth_free>>;
using Labels = std::unique_ptr<nltv_labels, Deleter<nltv_labels, nltv_labels_free>>;
using Mat = std::unique_ptr<nltv_matrix, Deleter<nltv_matrix, nltv_matrix_free>>;
using Graph = std::unique_ptr<nltv_graph, Deleter<nltv_graph, nltv_graph_free>>;
using Result = std::unique_ptr<nltv_result, Deleter<nltv_result, nltv_result_free>>;
using Report = std::unique_ptr<nltv_report, Deleter<nltv_report, nltv_report_free>>;

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw CliError{2, "cannot write " + path.string()};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{2, "cannot create directory " + dir.string() + ": " + ec.message()};
}

// Parses "auto" or a number.
std::optional<double> auto_or_number(const std::string& text, const char* name) {
    if (text == "auto") return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw CliError{1, std::string("--") + name + " expects a number or 'auto', got '" + text + "'"};
    }
    return v;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size()) throw CliError{1, "bad number '" + item + "'"};
        out.push_back(v);
    }
    if (out.empty()) throw CliError{1, "empty list"};
    return out;
}

// Everything a run depends on, echoed as <cmd>_manifest.json.
struct Manifest {
    json j;
    explicit Manifest(const std::string& cmd, const std::vector<std::string>& argv) {
        j["command"] = cmd;
        j["version"] = nltv_version();
        j["argv"] = argv;
    }
    void write(const fs::path& dir) const { write_file(dir / (j["command"].get<std::string>() + "_manifest.json"), j.dump(2) + "\n"); }
};

Cube open_cube(const std::string& cube_path, std::string header_path) {
    if (header_path.empty()) header_path = fs::path(cube_path).replace_extension(".json").string();
    nltv_cube* c = nullptr;
    check(nltv_cube_load(cube_path.c_str(), header_path.c_str(), &c));
    return Cube(c);
}

Graph open_graph(const std::string& path, const nltv_cube* cube) {
    nltv_graph* g = nullptr;
    check(nltv_graph_load(path.c_str(), &g));
    Graph graph(g);
    size_t pixels = 0, rows = 0, cols = 0;
    check(nltv_graph_info(g, &pixels, nullptr, nullptr));
    check(nltv_cube_shape(cube, &rows, &cols, nullptr));
    if (pixels != rows * cols) {
        throw CliError{2, "graph has " + std::to_string(pixels) + " pixels but cube has " +
                              std::to_string(rows * cols)};
    }
    return graph;
}

// ---- cluster options shared by `cluster` and `sweep` ---------------------

struct ClusterOptions {
    std::string cube, header, graph;
    size_t k = 5;
    std::string model = "quadratic";
    std::string init = "kmeans++";
    std::string lambda = "auto";
    std::string mu = "auto";
    size_t outer_max = 100;
    double outer_tol = 1e-3;
    double eta = 10.0;
    double grid_h = 0.0;
    double band_eps = 0.0;
    size_t max_iters = 500;
    double rel_tol = 1e-5;
    double theta = 1.0;
    double tau = 0.0;
    double sigma = 0.0;
    bool randomize_dual = false;
    uint64_t seed = 0;

    void add_to(CLI::App* app) {
        app->add_option("--cube", cube, "Cube data file (raw f32le, BIP)")->required();
        app->add_option("--header", header, "Cube header JSON (default: cube path with .json)");
        app->add_option("--graph", graph, "Graph file written by `nltv graph`")->required();
        app->add_option("--k", k, "Number of clusters");
        app->add_option("--model", model, "linear | quadratic");
        app->add_option("--init", init, "random | kmeans++ | kmeans | path to centroids CSV");
        app->add_option("--lambda", lambda, "Fidelity weight or 'auto'");
        app->add_option("--mu", mu, "Euclidean weight in the mixed distance or 'auto'");
        app->add_option("--outer-max", outer_max, "Maximum outer iterations");
        app->add_option("--outer-tol", outer_tol, "Stop when this fraction of labels changes");
        app->add_option("--eta", eta, "Stability weight of the simplex clustering");
        app->add_option("--grid-h", grid_h, "Simplex grid spacing (0 = default for k)");
        app->add_option("--band-eps", band_eps, "Boundary band half-width (0 = grid-h/2)");
        app->add_option("--max-iters", max_iters, "Maximum PDHG iterations per solve");
        app->add_option("--rel-tol", rel_tol, "PDHG relative-change tolerance");
        app->add_option("--theta", theta, "PDHG extrapolation");
        app->add_option("--tau", tau, "Primal step (with --sigma; default 1/||grad||)");
        app->add_option("--sigma", sigma, "Dual step (with --tau)");
        app->add_flag("--randomize-dual", randomize_dual, "Random feasible initial dual variable");
        app->add_option("--seed", seed, "Seed for all randomness");
    }

    nltv_cluster_config cluster_config() const {
        nltv_cluster_config c;
        nltv_cluster_config_default(&c);
        c.k = k;
        if (model == "linear") c.model = NLTV_MODEL_LINEAR;
        else if (model == "quadratic") c.model = NLTV_MODEL_QUADRATIC;
        else throw CliError{1, "unknown model '" + model + "' (expected linear or quadratic)"};
        if (init == "random") c.init = NLTV_INIT_RANDOM;
        else if (init == "kmeans++") c.init = NLTV_INIT_KMEANSPP;
        else if (init == "kmeans") c.init = NLTV_INIT_KMEANS;
        else c.init = NLTV_INIT_EXTERNAL;
        if (auto l = auto_or_number(lambda, "lambda")) {
            c.auto_lambda = 0;
            c.lambda = *l;
        }
        if (auto m = auto_or_number(mu, "mu")) {
            c.auto_mu = 0;
            c.mu = *m;
        }
        c.outer_max = outer_max;
        c.outer_tol = outer_tol;
        c.eta = eta;
        c.grid_h = grid_h;
        c.band_eps = band_eps;
        c.seed = seed;
        return c;
    }

    nltv_solver_config solver_config() const {
        nltv_solver_config s;
        nltv_solver_config_default(&s);
        s.max_iters = max_iters;
        s.rel_tol = rel_tol;
        s.theta = theta;
        if (tau > 0.0 || sigma > 0.0) {
            if (!(tau > 0.0 && sigma > 0.0)) throw CliError{1, "--tau and --sigma must be given together"};
            s.auto_steps = 0;
            s.tau = tau;
            s.sigma = sigma;
        }
        s.randomize_dual = randomize_dual ? 1 : 0;
        s.seed = seed;
        return s;
    }

    Mat external_centroids(const nltv_cluster_config& c) const {
        if (c.init != NLTV_INIT_EXTERNAL) return {};
        nltv_matrix* m = nullptr;
        check(nltv_matrix_load_csv(init.c_str(), &m));
        return Mat(m);
    }

    json to_json() const {
        json j;
        j["cube"] = cube;
        j["header"] = header;
        j["graph"] = graph;
        j["k"] = k;
        j["model"] = model;
        j["init"] = init;
        j["lambda"] = lambda;
        j["mu"] = mu;
        j["outer_max"] = outer_max;
        j["outer_tol"] = outer_tol;
        j["eta"] = eta;
        j["grid_h"] = grid_h;
        j["band_eps"] = band_eps;
        j["max_iters"] = max_iters;
        j["rel_tol"] = rel_tol;
        j["theta"] = theta;
        j["tau"] = tau;
        j["sigma"] = sigma;
        j["randomize_dual"] = randomize_dual;
        j["seed"] = seed;
        return j;
    }
};

// ---- synth ---------------------------------------------------------------

struct SynthOptions {
    size_t p = 5, bands = 162, rows = 200, cols = 200;
    double snr = 30.0, smoothness = 20.0, mixing_scale = 0.5, reflectance_scale = 50000.0;
    bool no_noise = false;
    std::string endmembers;
    uint64_t seed = 0;
    std::string out = ".";
};

void run_synth(const SynthOptions& o, Manifest& manifest) {
    nltv_gbm_config cfg;
    nltv_gbm_config_default(&cfg);
    cfg.p = o.p;
    cfg.bands = o.bands;
    cfg.rows = o.rows;
    cfg.cols = o.cols;
    cfg.snr_db = o.snr;
    cfg.smoothness = o.smoothness;
    cfg.mixing_scale = o.mixing_scale;
    cfg.reflectance_scale = o.reflectance_scale;
    cfg.add_noise = o.no_noise ? 0 : 1;
    // One user seed fans out to the four independent streams.
    cfg.gamma_seed = o.seed * 4 + 1;
    cfg.field_seed = o.seed * 4 + 2;
    cfg.noise_seed = o.seed * 4 + 3;
    cfg.endmember_seed = o.seed * 4 + 4;

    Mat user_e;
    if (!o.endmembers.empty()) {
        nltv_matrix* m = nullptr;
        check(nltv_matrix_load_csv(o.endmembers.c_str(), &m));
        user_e.reset(m);
    }
    nltv_cube* c = nullptr;
    nltv_truth* t = nullptr;
    nltv_matrix* e = nullptr;
    check(nltv_synth_generate(&cfg, user_e.get(), &c, &t, &e, nullptr));
    Cube cube(c);
    Truth truth(t);
    Mat em(e);

    const fs::path dir(o.out);
    ensure_dir(dir);
    check(nltv_cube_save(c, (dir / "cube.f32").c_str(), (dir / "cube.json").c_str()));
    check(nltv_truth_save(t, (dir / "truth.csv").c_str()));
    check(nltv_matrix_save_csv(e, (dir / "endmembers.csv").c_str()));

    json cfg_j;
    cfg_j["p"] = cfg.p;
    cfg_j["bands"] = cfg.bands;
    cfg_j["rows"] = cfg.rows;
    cfg_j["cols"] = cfg.cols;
    cfg_j["snr_db"] = cfg.snr_db;
    cfg_j["smoothness"] = cfg.smoothness;
    cfg_j["mixing_scale"] = cfg.mixing_scale;
    cfg_j["reflectance_scale"] = cfg.reflectance_scale;
    cfg_j["add_noise"] = cfg.add_noise != 0;
    cfg_j["seed"] = o.seed;
    cfg_j["gamma_seed"] = cfg.gamma_seed;
    cfg_j["field_seed"] = cfg.field_seed;
    cfg_j["noise_seed"] = cfg.noise_seed;
    cfg_j["endmember_seed"] = cfg.endmember_seed;
    cfg_j["endmembers_in"] = o.endmembers;
    manifest.j["config"] = cfg_j;
    manifest.j["outputs"] = {"cube.f32", "cube.json", "truth.csv", "endmembers.csv"};
    manifest.write(dir);
    std::cout << "wrote " << o.rows * o.cols << "-pixel scene to " << dir.string() << "\n";
}

// ---- graph ---------------------------------------------------------------

struct GraphOptions {
    std::string cube, header;
    int radius = 1;
    size_t m = 10;
    double sigma = 0.0;
    bool no_binarize = false;
    bool normalize = false;
    size_t trees = 4, checks = 512;
    uint64_t seed = 0;
    std::string out = ".";
};

void run_graph(const GraphOptions& o, Manifest& manifest) {
    Cube cube = open_cube(o.cube, o.header);
    nltv_patch_config cfg;
    nltv_patch_config_default(&cfg);
    cfg.patch_radius = o.radius;
    cfg.m = o.m;
    cfg.sigma = o.sigma;
    cfg.binarize = o.no_binarize ? 0 : 1;
    cfg.normalize_spectra = o.normalize ? 1 : 0;
    cfg.ann_trees = o.trees;
    cfg.ann_checks = o.checks;
    cfg.seed = o.seed;
    nltv_graph* g = nullptr;
    check(nltv_graph_build(cube.get(), &cfg, &g));
    Graph graph(g);

    const fs::path dir(o.out);
    ensure_dir(dir);
    check(nltv_graph_save(g, (dir / "graph.bin").c_str()));
    size_t pixels = 0, m = 0;
    double norm = 0.0;
    check(nltv_graph_info(g, &pixels, &m, &norm));

    json cfg_j;
    cfg_j["cube"] = o.cube;
    cfg_j["header"] = o.header;
    cfg_j["patch_radius"] = cfg.patch_radius;
    cfg_j["m"] = cfg.m;
    cfg_j["sigma"] = cfg.sigma;
    cfg_j["binarize"] = cfg.binarize != 0;
    cfg_j["normalize_spectra"] = cfg.normalize_spectra != 0;
    cfg_j["ann_trees"] = cfg.ann_trees;
    cfg_j["ann_checks"] = cfg.ann_checks;
    cfg_j["seed"] = cfg.seed;
    manifest.j["config"] = cfg_j;
    manifest.j["pixels"] = pixels;
    manifest.j["operator_norm"] = norm;
    manifest.j["outputs"] = {"graph.bin"};
    manifest.write(dir);
    std::cout << "graph: " << pixels << " pixels, " << m << " neighbours each, ||grad|| <= " << fmt(norm) << "\n";
}

// ---- cluster -------------------------------------------------------------

std::string history_csv(const nltv_result* r) {
    std::string out = "outer_iter,inner_iters,energy,changed_fraction\n";
    const size_t n = nltv_result_history_size(r);
    for (size_t i = 0; i < n; ++i) {
        nltv_outer_record h;
        check(nltv_result_history(r, i, &h));
        out += std::to_string(h.outer_iter) + "," + std::to_string(h.inner_iters) + "," + fmt(h.energy) + "," +
               fmt(h.changed_fraction) + "\n";
    }
    return out;
}

void run_cluster(const ClusterOptions& o, const std::string& out, Manifest& manifest) {
    const auto ccfg = o.cluster_config();
    const auto scfg = o.solver_config();
    Cube cube = open_cube(o.cube, o.header);
    Graph graph = open_graph(o.graph, cube.get());
    Mat external = o.external_centroids(ccfg);

    nltv_result* r = nullptr;
    check(nltv_cluster(cube.get(), graph.get(), &ccfg, &scfg, external.get(), &r));
    Result result(r);

    const fs::path dir(out);
    ensure_dir(dir);
    nltv_labels* l = nullptr;
    check(nltv_result_labels(r, &l));
    Labels labels(l);
    check(nltv_labels_save(l, (dir / "labels.csv").c_str(), (dir / "labels.png").c_str()));
    nltv_matrix* c = nullptr;
    check(nltv_result_centroids(r, &c));
    Mat centroids(c);
    check(nltv_matrix_save_csv(c, (dir / "centroids.csv").c_str()));
    write_file(dir / "history.csv", history_csv(r));

    double lambda = 0.0, mu = 0.0;
    check(nltv_result_params(r, &lambda, &mu));
    manifest.j["config"] = o.to_json();
    manifest.j["resolved"] = {{"lambda", lambda}, {"mu", mu}};
    manifest.j["outer_iterations"] = nltv_result_history_size(r);
    manifest.j["outputs"] = {"labels.csv", "labels.png", "centroids.csv", "history.csv"};
    manifest.write(dir);
    std::cout << "clustered with lambda=" << fmt(lambda) << " mu=" << fmt(mu) << " in "
              << nltv_result_history_size(r) << " outer iterations\n";
}

// ---- eval ----------------------------------------------------------------

struct EvalOptions {
    std::string labels, truth, merge;
    std::string out;
};

void run_eval(const EvalOptions& o, Manifest& manifest) {
    nltv_labels* l = nullptr;
    check(nltv_labels_load(o.labels.c_str(), 0, &l));
    Labels labels(l);
    nltv_truth* t = nullptr;
    check(nltv_truth_load(o.truth.c_str(), 0, &t));
    Truth truth(t);
    nltv_report* rep = nullptr;
    check(nltv_evaluate(l, t, o.merge.empty() ? nullptr : o.merge.c_str(), &rep));
    Report report(rep);
    std::cout << nltv_report_json(rep) << "\n";
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        ensure_dir(dir);
        write_file(dir / "report.json", std::string(nltv_report_json(rep)) + "\n");
        write_file(dir / "confusion.csv", nltv_report_confusion_csv(rep));
        manifest.j["config"] = {{"labels", o.labels}, {"truth", o.truth}, {"merge", o.merge}};
        manifest.j["overall_accuracy"] = nltv_report_accuracy(rep);
        manifest.j["outputs"] = {"report.json", "confusion.csv"};
        manifest.write(dir);
    }
}

// ---- render --------------------------------------------------------------

struct RenderOptions {
    std::string labels, png;
};

void run_render(const RenderOptions& o, Manifest& manifest) {
    nltv_labels* l = nullptr;
    check(nltv_labels_load(o.labels.c_str(), 0, &l));
    Labels labels(l);
    check(nltv_labels_save(l, nullptr, o.png.c_str()));
    const fs::path dir = fs::path(o.png).parent_path().empty() ? fs::path(".") : fs::path(o.png).parent_path();
    manifest.j["config"] = {{"labels", o.labels}, {"png", o.png}};
    manifest.j["outputs"] = {fs::path(o.png).filename().string()};
    manifest.write(dir);
}

// ---- sweep ---------------------------------------------------------------

struct SweepOptions {
    ClusterOptions cluster;
    std::string truth, merge;
    std::string scales = "0.01,0.1,1,10,100";
    std::string out = ".";
};

void run_sweep(const SweepOptions& o, Manifest& manifest) {
    auto ccfg = o.cluster.cluster_config();
    const auto scfg = o.cluster.solver_config();
    const auto scales = parse_list(o.scales);
    Cube cube = open_cube(o.cluster.cube, o.cluster.header);
    Graph graph = open_graph(o.cluster.graph, cube.get());
    nltv_truth* t = nullptr;
    size_t rows = 0, cols = 0;
    check(nltv_cube_shape(cube.get(), &rows, &cols, nullptr));
    check(nltv_truth_load(o.truth.c_str(), rows * cols, &t));
    Truth truth(t);

    // One initialisation shared by every grid point.
    Mat external = o.cluster.external_centroids(ccfg);
    nltv_matrix* init = nullptr;
    check(nltv_initial_centroids(cube.get(), &ccfg, ccfg.auto_mu ? 0.0 : ccfg.mu, external.get(), &init));
    Mat centroids(init);

    double base_lambda = ccfg.lambda, base_mu = ccfg.mu;
    int fallback = 0;
    if (ccfg.auto_lambda || ccfg.auto_mu) {
        double l = 0.0, m = 0.0;
        check(nltv_auto_params(cube.get(), graph.get(), init, ccfg.auto_mu ? -1.0 : ccfg.mu, &l, &m, &fallback));
        if (ccfg.auto_lambda) base_lambda = l;
        if (ccfg.auto_mu) base_mu = m;
    }

    std::string csv = "lambda_scale,mu_scale,lambda,mu,accuracy,outer_iters\n";
    for (double ls : scales) {
        for (double ms : scales) {
            nltv_cluster_config run = ccfg;
            run.init = NLTV_INIT_EXTERNAL;
            run.auto_lambda = 0;
            run.auto_mu = 0;
            run.lambda = base_lambda * ls;
            run.mu = base_mu * ms;
            nltv_result* r = nullptr;
            check(nltv_cluster(cube.get(), graph.get(), &run, &scfg, init, &r));
            Result result(r);
            nltv_labels* l = nullptr;
            check(nltv_result_labels(r, &l));
            Labels labels(l);
            nltv_report* rep = nullptr;
            check(nltv_evaluate(l, t, o.merge.empty() ? nullptr : o.merge.c_str(), &rep));
            Report report(rep);
            const std::string line = fmt(ls) + "," + fmt(ms) + "," + fmt(run.lambda) + "," + fmt(run.mu) + "," +
                                     fmt(nltv_report_accuracy(rep)) + "," +
                                     std::to_string(nltv_result_history_size(r)) + "\n";
            std::cout << line << std::flush;
            csv += line;
        }
    }
    const fs::path dir(o.out);
    ensure_dir(dir);
    write_file(dir / "sweep.csv", csv);
    manifest.j["config"] = o.cluster.to_json();
    manifest.j["config"]["truth"] = o.truth;
    manifest.j["config"]["merge"] = o.merge;
    manifest.j["config"]["scales"] = scales;
    manifest.j["base"] = {{"lambda", base_lambda}, {"mu", base_mu}, {"auto_fallback", fallback != 0}};
    manifest.j["outputs"] = {"sweep.csv"};
    manifest.write(dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal total variation clustering of hyperspectral cubes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nltv_version()));

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic bilinear-mixture scene");
    synth_cmd->add_option("--p", synth.p, "Endmember count");
    synth_cmd->add_option("--bands", synth.bands, "Spectral bands");
    synth_cmd->add_option("--rows", synth.rows, "Image rows");
    synth_cmd->add_option("--cols", synth.cols, "Image columns");
    synth_cmd->add_option("--snr", synth.snr, "Signal-to-noise ratio in dB");
    synth_cmd->add_option("--smoothness", synth.smoothness, "Abundance field length scale in pixels");
    synth_cmd->add_option("--mixing-scale", synth.mixing_scale, "Abundance temperature (smaller = purer)");
    synth_cmd->add_option("--reflectance-scale", synth.reflectance_scale, "Multiplier applied to the unit-reflectance mixture");
    synth_cmd->add_option("--endmembers", synth.endmembers, "p x bands CSV replacing the bundled spectra");
    synth_cmd->add_flag("--no-noise", synth.no_noise, "Skip the additive noise");
    synth_cmd->add_option("--seed", synth.seed, "Seed for all randomness");
    synth_cmd->add_option("--out", synth.out, "Output directory");

    GraphOptions graph;
    auto* graph_cmd = app.add_subcommand("graph", "Build the nonlocal patch graph");
    graph_cmd->add_option("--cube", graph.cube, "Cube data file")->required();
    graph_cmd->add_option("--header", graph.header, "Cube header JSON (default: cube path with .json)");
    graph_cmd->add_option("--radius", graph.radius, "Patch radius (1 = 3x3)");
    graph_cmd->add_option("--m", graph.m, "Neighbours per pixel");
    graph_cmd->add_option("--patch-sigma", graph.sigma, "Gaussian patch weight std (0 = radius)");
    graph_cmd->add_flag("--no-binarize", graph.no_binarize, "Keep w = 1/d^2 instead of 1");
    graph_cmd->add_flag("--normalize", graph.normalize, "Compare unit-norm spectra");
    graph_cmd->add_option("--trees", graph.trees, "Randomized k-d trees");
    graph_cmd->add_option("--checks", graph.checks, "Leaf checks per query");
    graph_cmd->add_option("--seed", graph.seed, "Seed for all randomness");
    graph_cmd->add_option("--out", graph.out, "Output directory");

    ClusterOptions cluster;
    std::string cluster_out = ".";
    auto* cluster_cmd = app.add_subcommand("cluster", "Cluster a cube");
    cluster.add_to(cluster_cmd);
    cluster_cmd->add_option("--out", cluster_out, "Output directory");

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Overall accuracy against ground truth");
    eval_cmd->add_option("--labels", eval.labels, "Label map CSV")->required();
    eval_cmd->add_option("--truth", eval.truth, "Ground-truth CSV (-1 = unlabeled)")->required();
    eval_cmd->add_option("--merge", eval.merge, "Class merges, e.g. 1+2 or 1+2;4+5");
    eval_cmd->add_option("--out", eval.out, "Directory for report.json and confusion.csv");

    RenderOptions render;
    auto* render_cmd = app.add_subcommand("render", "Render a label CSV as an indexed PNG");
    render_cmd->add_option("--labels", render.labels, "Label map CSV")->required();
    render_cmd->add_option("--png", render.png, "Output PNG")->required();

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy over a lambda x mu grid");
    sweep.cluster.add_to(sweep_cmd);
    sweep_cmd->add_option("--truth", sweep.truth, "Ground-truth CSV")->required();
    sweep_cmd->add_option("--merge", sweep.merge, "Class merges");
    sweep_cmd->add_option("--scales", sweep.scales, "Comma-separated multipliers for lambda and mu");
    sweep_cmd->add_option("--out", sweep.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (*synth_cmd) {
            Manifest m("synth", args);
            run_synth(synth, m);
        } else if (*graph_cmd) {
            Manifest m("graph", args);
            run_graph(graph, m);
        } else if (*cluster_cmd) {
            Manifest m("cluster", args);
            run_cluster(cluster, cluster_out, m);
        } else if (*eval_cmd) {
            Manifest m("eval", args);
            run_eval(eval, m);
        } else if (*render_cmd) {
            Manifest m("render", args);
            run_render(render, m);
        } else if (*sweep_cmd) {
            Manifest m("sweep", args);
            run_sweep(sweep, m);
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    }
    return 0;
}

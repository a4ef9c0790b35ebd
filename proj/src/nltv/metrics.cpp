#include "nltv/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "nltv/common.hpp"

namespace nltv {

ClassMerges parse_merges(std::string_view spec) {
    ClassMerges merges;
    std::vector<std::uint32_t> group;
    std::size_t pos = 0;
    auto flush = [&] {
        if (group.size() > 1) merges.push_back(group);
        else if (group.size() == 1) fail(ErrorKind::InvalidArgument, "merge group needs at least two classes");
        group.clear();
    };
    while (pos <= spec.size()) {
        std::size_t end = pos;
        while (end < spec.size() && spec[end] != '+' && spec[end] != ',' && spec[end] != ';') ++end;
        auto token = spec.substr(pos, end - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (!token.empty()) {
            std::uint32_t v = 0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc() || ptr != token.data() + token.size()) {
                fail(ErrorKind::InvalidArgument, "invalid merge spec '" + std::string(spec) + "'");
            }
            group.push_back(v);
        }
        if (end >= spec.size() || spec[end] != '+') flush();
        pos = end + 1;
    }
    return merges;
}

std::vector<int> max_weight_matching(const std::vector<std::vector<std::size_t>>& weights) {
    const std::size_t rows = weights.size();
    const std::size_t cols = rows ? weights.front().size() : 0;
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return {};
    long long top = 0;
    for (const auto& row : weights) {
        require(row.size() == cols, "matching: ragged weight matrix");
        for (auto w : row) top = std::max(top, static_cast<long long>(w));
    }
    // Square cost matrix (1-based) for the minimisation form of the Hungarian method.
    auto cost = [&](std::size_t i, std::size_t j) -> long long {
        const long long w = (i <= rows && j <= cols) ? static_cast<long long>(weights[i - 1][j - 1]) : 0;
        return top - w;
    };
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> pu(n + 1, 0), pv(n + 1, 0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<bool> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            long long delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const long long cur = cost(i0, j) - pu[i0] - pv[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    pu[match[j]] += delta;
                    pv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j];
        if (i >= 1 && i <= rows && j <= cols) out[i - 1] = static_cast<int>(j - 1);
    }
    return out;
}

namespace {

std::vector<int> exhaustive_matching(const std::vector<std::vector<std::size_t>>& weights, std::size_t cols) {
    const std::size_t rows = weights.size();
    const std::size_t n = std::max(rows, cols);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    std::vector<std::size_t> best_perm = perm;
    do {
        std::size_t total = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            if (perm[i] < cols) total += weights[i][perm[i]];
        }
        if (total > best) {
            best = total;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<int> out(rows, -1);
    for (std::size_t i = 0; i < rows; ++i) {
        if (best_perm[i] < cols) out[i] = static_cast<int>(best_perm[i]);
    }
    return out;
}

}  // namespace

EvalReport overall_accuracy(const LabelMap& map, const GroundTruth& gt, const ClassMerges& merges) {
    if (map.assignment.size() != gt.labels.size()) {
        fail(ErrorKind::Format, "length mismatch: label map has " + std::to_string(map.assignment.size()) +
                                             " pixels, ground truth " + std::to_string(gt.labels.size()));
    }
    EvalReport rep;
    rep.k = map.k;
    for (auto a : map.assignment) rep.k = std::max<std::size_t>(rep.k, a + 1);
    rep.k_gt = gt.class_count();

    std::vector<std::uint32_t> remap(rep.k_gt);
    std::iota(remap.begin(), remap.end(), 0u);
    for (const auto& group : merges) {
        const auto target = *std::min_element(group.begin(), group.end());
        for (auto c : group) {
            if (c < remap.size()) remap[c] = target;
        }
    }

    rep.confusion.assign(rep.k, std::vector<std::size_t>(rep.k_gt, 0));
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (!gt.labels[i]) continue;
        ++rep.n_labeled;
        ++rep.confusion[map.assignment[i]][remap[*gt.labels[i]]];
    }
    rep.matching = std::max(rep.k, rep.k_gt) <= 8 ? exhaustive_matching(rep.confusion, rep.k_gt)
                                                  : max_weight_matching(rep.confusion);
    for (std::size_t l = 0; l < rep.k; ++l) {
        if (rep.matching[l] >= 0) rep.n_correct += rep.confusion[l][static_cast<std::size_t>(rep.matching[l])];
    }
    rep.overall_accuracy = rep.n_labeled ? static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_labeled) : 0.0;
    return rep;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["overall_accuracy"] = overall_accuracy;
    j["n_labeled"] = n_labeled;
    j["n_correct"] = n_correct;
    j["k"] = k;
    j["k_gt"] = k_gt;
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (std::size_t l = 0; l < matching.size(); ++l) {
        m[std::to_string(l)] = matching[l];
    }
    j["matching"] = m;
    j["confusion"] = confusion;
    return j.dump(2);
}

std::string EvalReport::confusion_csv() const {
    std::string out = "cluster";
    for (std::size_t c = 0; c < k_gt; ++c) out += ",class_" + std::to_string(c);
    out += '\n';
    for (std::size_t l = 0; l < confusion.size(); ++l) {
        out += std::to_string(l);
        for (auto v : confusion[l]) out += "," + std::to_string(v);
        out += '\n';
    }
    return out;
}

}  // namespace nltv

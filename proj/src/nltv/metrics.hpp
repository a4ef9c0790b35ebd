#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nltv/hsi.hpp"

namespace nltv {

// Groups of ground-truth classes that are collapsed into one before matching.
// Each group maps onto its smallest member.
using ClassMerges = std::vector<std::vector<std::uint32_t>>;

// Parses "1+2" or "1+2;4+5" (',' also separates groups).
ClassMerges parse_merges(std::string_view spec);

struct EvalReport {
    double overall_accuracy = 0.0;
    std::size_t n_labeled = 0;
    std::size_t n_correct = 0;
    std::size_t k = 0;      // predicted clusters
    std::size_t k_gt = 0;   // ground-truth classes (after merging, ids kept)
    std::vector<int> matching;                       // cluster -> class, -1 if unmatched
    std::vector<std::vector<std::size_t>> confusion; // k x k_gt counts

    std::string to_json() const;
    std::string confusion_csv() const;
};

// Maximum-weight one-to-one assignment of rows to columns of a rectangular
// count matrix. Returns the column for each row (-1 when rows > cols).
std::vector<int> max_weight_matching(const std::vector<std::vector<std::size_t>>& weights);

// Best one-to-one cluster-to-class assignment: exhaustive over permutations
// when max(k, k_gt) <= 8, Hungarian algorithm above. Unlabeled pixels are
// ignored.
EvalReport overall_accuracy(const LabelMap& map, const GroundTruth& gt, const ClassMerges& merges = {});

}  // namespace nltv

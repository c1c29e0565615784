// Exact average holdout error of the k-nearest-neighbor Gibbs classifier
// over every split of an in-sample set into r training and n holdout points.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ensval {

/// In-sample points with binary labels. Labels are stored as 0/1 codes
/// indexing label_names.
struct LabeledDataset
{
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<std::string> label_names;
    std::size_t r = 0;  ///< training points per split
    std::size_t n = 0;  ///< holdout points per split

    std::size_t size() const { return labels.size(); }
    std::size_t dimension() const { return features.empty() ? 0 : features.front().size(); }

    void validate() const;

    /// Builds a dataset from numeric labels; any two distinct values are allowed.
    static LabeledDataset from_points(std::vector<std::vector<double>> features,
                                      const std::vector<int>& labels, std::size_t n_holdout);
};

struct CsvOptions
{
    char delimiter = ',';
    bool header = false;
};

/// Reads one point per row: d numeric columns followed by a label column.
LabeledDataset read_dataset(std::istream& in, std::size_t n_holdout, const CsvOptions& opts = {});
LabeledDataset read_dataset_file(const std::string& path, std::size_t n_holdout,
                                 const CsvOptions& opts = {});

/// Other point indices by ascending Euclidean distance to q, ties by index.
using NeighborOrdering = std::vector<std::size_t>;

NeighborOrdering neighbor_ordering(const LabeledDataset& data, std::size_t q);

/// Probability that the (i)th nearest neighbor lands in the holdout set H,
/// given that h of the first i - 1 did and the query point is in H.
double split_membership_probability(std::size_t r, std::size_t n, std::size_t i, std::size_t h);

/// Mass bookkeeping after each neighbor of the split DP.
struct SplitStep
{
    double active = 0.0;
    double absorbed_error = 0.0;
    double absorbed_correct = 0.0;
};

/// Probability over holdout sets H containing q that the k-NN classifier
/// built on the other r points misclassifies q. k must be odd and <= r.
double per_example_misclassification_probability(const LabeledDataset& data, std::size_t q,
                                                 std::size_t k);

/// Same computation, also returning the mass bookkeeping after every step.
double per_example_misclassification_probability(const LabeledDataset& data, std::size_t q,
                                                 std::size_t k, std::vector<SplitStep>& trace);

double gibbs_average_holdout_error(const LabeledDataset& data, std::size_t k);

inline constexpr std::uint64_t kDefaultSplitCap = 1'000'000;

/// Averages the holdout error of every one of the C(r + n, n) splits.
double brute_force_average_holdout_error(const LabeledDataset& data, std::size_t k,
                                         std::uint64_t cap = kDefaultSplitCap);

}  // namespace ensval

#include "ensval/knn_holdout.hpp"

#include "ensval/bounds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

namespace ensval {

namespace {

[[noreturn]] void fail(const std::string& what) { throw PreconditionError(what); }

void check_k(const LabeledDataset& data, std::size_t k)
{
    if (k == 0 || k % 2 == 0) fail(fmt::format("k must be a positive odd integer, got {}", k));
    if (k > data.r) fail(fmt::format("k={} exceeds the {} training points per split", k, data.r));
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double binomial(std::size_t total, std::size_t pick)
{
    double c = 1.0;
    for (std::size_t i = 1; i <= pick; ++i)
        c = c * static_cast<double>(total - pick + i) / static_cast<double>(i);
    return c;
}

}  // namespace

void LabeledDataset::validate() const
{
    if (features.size() != labels.size()) fail("feature rows and labels differ in count");
    if (size() < 2) fail("dataset needs at least two points");
    if (dimension() < 1) fail("feature vectors need at least one dimension");
    for (const auto& row : features)
        if (row.size() != dimension()) fail("feature vectors differ in dimension");
    if (n < 1 || n > size() - 1) fail(fmt::format("holdout size must be in [1, {}], got {}", size() - 1, n));
    if (r + n != size()) fail("r + n must equal the number of points");
    if (label_names.size() > 2) fail("k-NN voting needs binary labels");
    for (int y : labels)
        if (y < 0 || y >= static_cast<int>(std::max<std::size_t>(label_names.size(), 1)))
            fail("label code out of range");
}

LabeledDataset LabeledDataset::from_points(std::vector<std::vector<double>> features,
                                           const std::vector<int>& labels, std::size_t n_holdout)
{
    LabeledDataset data;
    data.features = std::move(features);
    for (int y : labels) {
        const std::string name = std::to_string(y);
        auto it = std::find(data.label_names.begin(), data.label_names.end(), name);
        if (it == data.label_names.end()) {
            data.label_names.push_back(name);
            if (data.label_names.size() > 2) fail("k-NN voting needs binary labels");
            it = data.label_names.end() - 1;
        }
        data.labels.push_back(static_cast<int>(it - data.label_names.begin()));
    }
    data.n = n_holdout;
    data.r = data.labels.size() >= n_holdout ? data.labels.size() - n_holdout : 0;
    data.validate();
    return data;
}

LabeledDataset read_dataset(std::istream& in, std::size_t n_holdout, const CsvOptions& opts)
{
    LabeledDataset data;
    std::string line;
    std::size_t line_no = 0;
    bool skipped_header = !opts.header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, opts.delimiter)) cells.push_back(trim(cell));
        if (cells.size() < 2)
            fail(fmt::format("line {}: need at least one feature and a label", line_no));

        std::vector<double> x;
        for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
            double v = 0.0;
            const auto& txt = cells[c];
            const auto [ptr, ec] = std::from_chars(txt.data(), txt.data() + txt.size(), v);
            if (ec != std::errc{} || ptr != txt.data() + txt.size())
                fail(fmt::format("line {}: '{}' is not a number", line_no, txt));
            x.push_back(v);
        }
        const std::string& label = cells.back();
        auto it = std::find(data.label_names.begin(), data.label_names.end(), label);
        if (it == data.label_names.end()) {
            data.label_names.push_back(label);
            if (data.label_names.size() > 2)
                fail(fmt::format("line {}: third distinct label '{}'; k-NN voting needs binary labels",
                                 line_no, label));
            it = data.label_names.end() - 1;
        }
        data.features.push_back(std::move(x));
        data.labels.push_back(static_cast<int>(it - data.label_names.begin()));
    }
    data.n = n_holdout;
    data.r = data.size() >= n_holdout ? data.size() - n_holdout : 0;
    data.validate();
    return data;
}

LabeledDataset read_dataset_file(const std::string& path, std::size_t n_holdout, const CsvOptions& opts)
{
    std::ifstream in(path);
    if (!in) fail(fmt::format("cannot open dataset '{}'", path));
    return read_dataset(in, n_holdout, opts);
}

NeighborOrdering neighbor_ordering(const LabeledDataset& data, std::size_t q)
{
    if (q >= data.size()) fail(fmt::format("point index {} out of range", q));
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(data.size() - 1);
    for (std::size_t i = 0; i < data.size(); ++i)
        if (i != q) keyed.emplace_back(squared_distance(data.features[q], data.features[i]), i);
    std::sort(keyed.begin(), keyed.end());
    NeighborOrdering out;
    out.reserve(keyed.size());
    for (const auto& [dist, i] : keyed) out.push_back(i);
    return out;
}

double split_membership_probability(std::size_t r, std::size_t n, std::size_t i, std::size_t h)
{
    if (i < 1 || i > r + n - 1) fail(fmt::format("neighbor rank {} outside [1, {}]", i, r + n - 1));
    if (h >= i) fail(fmt::format("h={} must be below i={}", h, i));
    const double open = static_cast<double>(n) - static_cast<double>(h) - 1.0;
    return std::max(open / static_cast<double>(r + n - i), 0.0);
}

double per_example_misclassification_probability(const LabeledDataset& data, std::size_t q,
                                                 std::size_t k, std::vector<SplitStep>& trace)
{
    data.validate();
    check_k(data, k);
    const NeighborOrdering order = neighbor_ordering(data, q);
    const int y = data.labels[q];
    const std::size_t threshold = (k + 1) / 2;
    const std::size_t max_h = data.n - 1;

    // active[h][v]: h of the neighbors so far are in H and v of the others
    // vote against y. A state leaves the table once k votes are fixed.
    std::vector<std::vector<double>> active(max_h + 1, std::vector<double>(k, 0.0));
    std::vector<std::vector<double>> next = active;
    active[0][0] = 1.0;
    double error = 0.0;
    double correct = 0.0;
    trace.clear();

    for (std::size_t i = 1; i <= order.size(); ++i) {
        const bool wrong = data.labels[order[i - 1]] != y;
        for (auto& row : next) std::fill(row.begin(), row.end(), 0.0);
        double remaining = 0.0;
        for (std::size_t h = 0; h <= std::min(max_h, i - 1); ++h) {
            const std::size_t outside = i - 1 - h;
            if (outside >= k) continue;
            const double p_in = split_membership_probability(data.r, data.n, i, h);
            for (std::size_t v = 0; v <= outside; ++v) {
                const double mass = active[h][v];
                if (mass == 0.0) continue;
                if (p_in > 0.0) next[h + 1][v] += mass * p_in;
                const double out_mass = mass * (1.0 - p_in);
                const std::size_t votes_against = v + (wrong ? 1 : 0);
                if (outside + 1 == k) {
                    (votes_against >= threshold ? error : correct) += out_mass;
                } else {
                    next[h][votes_against] += out_mass;
                }
            }
        }
        active.swap(next);
        for (const auto& row : active) remaining = std::accumulate(row.begin(), row.end(), remaining);
        trace.push_back({remaining, error, correct});
        if (remaining == 0.0) break;
    }
    return std::clamp(error, 0.0, 1.0);
}

double per_example_misclassification_probability(const LabeledDataset& data, std::size_t q,
                                                 std::size_t k)
{
    std::vector<SplitStep> trace;
    return per_example_misclassification_probability(data, q, k, trace);
}

double gibbs_average_holdout_error(const LabeledDataset& data, std::size_t k)
{
    data.validate();
    check_k(data, k);
    double sum = 0.0;
    for (std::size_t q = 0; q < data.size(); ++q) sum += per_example_misclassification_probability(data, q, k);
    return sum / static_cast<double>(data.size());
}

double brute_force_average_holdout_error(const LabeledDataset& data, std::size_t k, std::uint64_t cap)
{
    data.validate();
    check_k(data, k);
    const std::size_t total = data.size();
    const double splits = binomial(total, data.n);
    if (splits > static_cast<double>(cap))
        fail(fmt::format("{:.0f} splits exceed the enumeration cap {}", splits, cap));

    std::vector<NeighborOrdering> orders;
    orders.reserve(total);
    for (std::size_t q = 0; q < total; ++q) orders.push_back(neighbor_ordering(data, q));

    // Holdout membership mask, enumerated as the permutations of a sorted 0/1 vector.
    std::vector<char> in_holdout(total, 0);
    std::fill(in_holdout.end() - static_cast<std::ptrdiff_t>(data.n), in_holdout.end(), 1);
    double sum = 0.0;
    std::uint64_t count = 0;
    do {
        std::size_t errors = 0;
        for (std::size_t q = 0; q < total; ++q) {
            if (!in_holdout[q]) continue;
            std::size_t votes = 0;
            std::size_t against = 0;
            for (std::size_t nb : orders[q]) {
                if (in_holdout[nb]) continue;
                if (data.labels[nb] != data.labels[q]) ++against;
                if (++votes == k) break;
            }
            if (2 * against > k) ++errors;
        }
        sum += static_cast<double>(errors) / static_cast<double>(data.n);
        ++count;
    } while (std::next_permutation(in_holdout.begin(), in_holdout.end()));
    return sum / static_cast<double>(count);
}

}  // namespace ensval

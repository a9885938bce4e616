#include "blindpoly/selection.hpp"

#include "blindpoly/error.hpp"
#include "blindpoly/kernels.hpp"
#include "blindpoly/vandermonde.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace blindpoly {

CandidateGrid::CandidateGrid(Vector values) : values_(std::move(values)) {
    if (values_.size() < 1) throw InvalidInput("candidate grid must be non-empty");
    if (!values_.allFinite()) throw InvalidInput("candidate grid must be finite");
    for (Eigen::Index g = 1; g < values_.size(); ++g) {
        if (!(values_[g] > values_[g - 1])) {
            throw InvalidInput("candidate grid must be strictly increasing");
        }
    }
}

CandidateGrid CandidateGrid::uniform(double lo, double hi, Eigen::Index G) {
    if (G < 2) throw InvalidInput("uniform grid needs at least two points");
    if (!(lo < hi)) throw InvalidInput("uniform grid needs lo < hi");
    Vector v(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        v[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(G - 1);
    }
    return CandidateGrid(std::move(v));
}

SelectionPattern::SelectionPattern(std::vector<Eigen::Index> indices, Eigen::Index grid_size)
    : indices_(std::move(indices)) {
    if (indices_.empty()) throw InvalidInput("selection pattern must be non-empty");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] < 0 || indices_[i] >= grid_size) {
            throw InvalidInput("selection pattern index out of grid range");
        }
        if (i > 0 && indices_[i] <= indices_[i - 1]) {
            throw InvalidInput("selection pattern must be strictly increasing");
        }
    }
}

double binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::int64_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(c);
}

namespace {

// Fits one pattern given the precomputed G x K grid Vandermonde.
class PatternFitter {
public:
    PatternFitter(const Matrix& grid_vandermonde, const ObservationMatrix& Y)
        : Vg_(grid_vandermonde), Y_(Y), A_(Y.rows(), grid_vandermonde.cols()),
          R_(Y.rows(), Y.cols()), qr_(Y.rows(), grid_vandermonde.cols()) {}

    // Writes W_hat into `W` and returns the squared Frobenius residual.
    double fit(std::span<const Eigen::Index> pattern, Matrix& W) {
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            A_.row(static_cast<Eigen::Index>(i)) = Vg_.row(pattern[i]);
        }
        qr_.setThreshold(static_cast<double>(std::max(A_.rows(), A_.cols())) *
                         std::numeric_limits<double>::epsilon());
        qr_.compute(A_);
        if (qr_.rank() < A_.cols()) {
            throw RankDeficient("selected sub-Vandermonde is rank deficient", qr_.rank(),
                                A_.cols());
        }
        W = qr_.solve(Y_);
        R_.noalias() = Y_ - A_ * W;
        return kernels::sum_squares({R_.data(), static_cast<std::size_t>(R_.size())});
    }

private:
    const Matrix& Vg_;
    const ObservationMatrix& Y_;
    Matrix A_;
    Matrix R_;
    Eigen::ColPivHouseholderQR<Matrix> qr_;
};

void check_shapes(Eigen::Index G, const ObservationMatrix& Y, Eigen::Index K) {
    if (K < 1) throw InvalidInput("K must be at least 1");
    if (Y.rows() < K) {
        throw InvalidInput(fmt::format("selection needs N >= K (N = {}, K = {})", Y.rows(), K));
    }
    if (Y.rows() > G) {
        throw InvalidInput(fmt::format("grid has {} points, fewer than N = {}", G, Y.rows()));
    }
    if (!Y.allFinite()) throw InvalidInput("observation matrix must be finite");
}

// Lexicographic rank -> combination of `k` indices from {0..n-1}.
std::vector<Eigen::Index> unrank(std::uint64_t rank, Eigen::Index n, Eigen::Index k) {
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(k));
    Eigen::Index next = 0;
    for (Eigen::Index slot = 0; slot < k; ++slot) {
        for (Eigen::Index v = next;; ++v) {
            // Combinations starting with v at this slot.
            const auto count = static_cast<std::uint64_t>(binomial(n - v - 1, k - slot - 1));
            if (rank < count) {
                out.push_back(v);
                next = v + 1;
                break;
            }
            rank -= count;
        }
    }
    return out;
}

// Advances to the lexicographic successor; false after the last combination.
bool next_combination(std::vector<Eigen::Index>& c, Eigen::Index n) {
    const auto k = static_cast<Eigen::Index>(c.size());
    Eigen::Index i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return false;
    ++c[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j) {
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
    return true;
}

struct Record {
    std::vector<Eigen::Index> pattern;
    double residual;
    Matrix W;
};

// Prefix-minimum records of one contiguous block, oldest first, each strictly
// below its predecessor. Records more than `tie` above the block minimum can
// never be selected and are dropped. For any threshold at or above the block
// minimum, the first pattern in the block meeting it is one of these records.
struct BlockRecords {
    std::vector<Record> records;

    double minimum() const {
        return records.empty() ? std::numeric_limits<double>::infinity()
                               : records.back().residual;
    }
};

BlockRecords scan_block(const Matrix& Vg, const ObservationMatrix& Y, std::uint64_t first,
                        std::uint64_t count, double tie) {
    BlockRecords out;
    if (count == 0) return out;
    PatternFitter fitter(Vg, Y);
    std::vector<Eigen::Index> c = unrank(first, Vg.rows(), Y.rows());
    Matrix W;
    for (std::uint64_t i = 0; i < count; ++i) {
        const double r = fitter.fit(c, W);
        if (r < out.minimum()) {
            out.records.push_back({c, r, W});
            const double keep = r + tie;
            auto stale = std::find_if(out.records.begin(), out.records.end(),
                                      [keep](const Record& rec) { return rec.residual <= keep; });
            out.records.erase(out.records.begin(), stale);
        }
        if (i + 1 < count) next_combination(c, Vg.rows());
    }
    return out;
}

}  // namespace

SelectionFit selection_residual(const CandidateGrid& grid, const SelectionPattern& pattern,
                                const ObservationMatrix& Y, Eigen::Index K) {
    check_shapes(grid.size(), Y, K);
    if (pattern.size() != Y.rows()) {
        throw InvalidInput("selection pattern length must equal the rows of Y");
    }
    const Matrix Vg = build_vandermonde(SampleLocations(grid.values()), K);
    PatternFitter fitter(Vg, Y);
    SelectionFit out{0.0, Matrix()};
    out.residual = fitter.fit(pattern.indices(), out.W_hat);
    return out;
}

SelectionResult exhaustive_search(const CandidateGrid& grid, const ObservationMatrix& Y,
                                  Eigen::Index K, const SelectionConfig& cfg) {
    check_shapes(grid.size(), Y, K);
    const Eigen::Index G = grid.size();
    const Eigen::Index N = Y.rows();
    const double total = binomial(G, N);
    if (total > cfg.budget) {
        throw BudgetExceeded(
            fmt::format("exhaustive search over binomial({}, {}) = {:.6g} patterns exceeds the "
                        "budget of {:.6g}",
                        G, N, total, cfg.budget),
            total);
    }

    const Matrix Vg = build_vandermonde(SampleLocations(grid.values()), K);
    const double tie = cfg.tie_tolerance * std::max(1.0, Y.squaredNorm());
    const auto count = static_cast<std::uint64_t>(total);

    unsigned jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
    jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, count));

    std::vector<BlockRecords> blocks(jobs);
    const std::uint64_t per = count / jobs;
    const std::uint64_t extra = count % jobs;
    auto block_start = [&](unsigned b) { return b * per + std::min<std::uint64_t>(b, extra); };

    if (jobs == 1) {
        blocks[0] = scan_block(Vg, Y, 0, count, tie);
    } else {
        std::vector<std::exception_ptr> errors(jobs);
        {
            std::vector<std::jthread> workers;
            for (unsigned b = 0; b < jobs; ++b) {
                workers.emplace_back([&, b] {
                    try {
                        blocks[b] = scan_block(Vg, Y, block_start(b), block_start(b + 1) - block_start(b), tie);
                    } catch (...) {
                        errors[b] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    // Lexicographically first pattern within `tie` of the global minimum.
    // Blocks cover consecutive rank ranges, so the split does not change it.
    double global_min = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) global_min = std::min(global_min, b.minimum());
    const Record* best = nullptr;
    for (const auto& b : blocks) {
        for (const auto& rec : b.records) {
            if (rec.residual <= global_min + tie) {
                best = &rec;
                break;
            }
        }
        if (best) break;
    }
    if (best == nullptr) throw Error("exhaustive search produced no finite residual");

    Vector x_hat(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        x_hat[i] = grid.values()[best->pattern[static_cast<std::size_t>(i)]];
    }
    return SelectionResult{SelectionPattern(best->pattern, G), best->residual, best->W,
                           SampleLocations(std::move(x_hat)), total};
}

}  // namespace blindpoly

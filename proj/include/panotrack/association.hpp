// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panotrack/error.hpp"
#include "panotrack/geometry.hpp"

namespace panotrack {

/// Appearance descriptor. Stored in single precision; all arithmetic on it
/// is carried out in double.
using Embedding = std::vector<float>;

inline constexpr std::size_t kDefaultEmbeddingDim = 2048;

/// One minus the cosine similarity. In [0, 2] for arbitrary vectors and
/// [0, 1] when both have nonnegative components.
inline double appearance_cost(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (!(aa > 0.0) || !(bb > 0.0)) {
        throw Error(ErrorCode::kZeroNormEmbedding, "embedding has zero norm");
    }
    // Rounding can push |cos| a hair past 1.
    const double cosine = std::clamp(dot / std::sqrt(aa * bb), -1.0, 1.0);
    return 1.0 - cosine;
}

/// Exponential-kernel distance between a predicted and a detected ground
/// location, with squared distance scaled by the stature prior. In [0, 1).
inline double trajectory_cost(const Location3D& predicted, const Location3D& detected,
                              double body_height_m) {
    const double dx = predicted.x_m - detected.x_m;
    const double dz = predicted.z_m - detected.z_m;
    return 1.0 - std::exp(-(dx * dx + dz * dz) / (body_height_m * body_height_m));
}

/// Dense row-major cost matrix; rows are tracks, columns are detections.
class CostMatrix {
public:
    CostMatrix() = default;
    CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> values() const { return data_; }

    static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t n_cols = rows.empty() ? 0 : rows.front().size();
        CostMatrix m(rows.size(), n_cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != n_cols) {
                throw Error(ErrorCode::kDimensionMismatch, "ragged cost matrix");
            }
            for (std::size_t c = 0; c < n_cols; ++c) m(r, c) = rows[r][c];
        }
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Assignment {
    /// (row, column) pairs, ascending by row.
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;
    double total_cost = 0.0;
};

/// Cost given to padding cells when a rectangular problem is squared up.
/// Any admissible tracker cost is below 3.
inline constexpr double kAssignmentPadCost = 10.0;

/// Minimum-cost assignment by the Hungarian method (shortest augmenting
/// paths with dual potentials, O(n^3)). Rectangular inputs are padded to a
/// square with kAssignmentPadCost, so exactly min(rows, cols) real pairs are
/// returned. Scans run in ascending index order with strict comparisons,
/// which makes tie resolution deterministic.
inline Assignment solve_assignment(const CostMatrix& cost) {
    for (double v : cost.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteCost, "cost matrix has non-finite entry");
    }
    const std::size_t n_rows = cost.rows();
    const std::size_t n_cols = cost.cols();
    const std::size_t n = std::max(n_rows, n_cols);

    Assignment result;
    if (n_rows == 0 || n_cols == 0) {
        for (std::size_t r = 0; r < n_rows; ++r) result.unmatched_rows.push_back(r);
        for (std::size_t c = 0; c < n_cols; ++c) result.unmatched_cols.push_back(c);
        return result;
    }

    const auto at = [&](std::size_t r, std::size_t c) {
        return (r < n_rows && c < n_cols) ? cost(r, c) : kAssignmentPadCost;
    };

    // 1-based arrays; index 0 is the virtual source column.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> row_potential(n + 1, 0.0);
    std::vector<double> col_potential(n + 1, 0.0);
    std::vector<std::size_t> col_owner(n + 1, 0);
    std::vector<std::size_t> way(n + 1, 0);
    std::vector<double> min_slack(n + 1);
    std::vector<char> used(n + 1);

    for (std::size_t row = 1; row <= n; ++row) {
        col_owner[0] = row;
        std::size_t col0 = 0;
        std::fill(min_slack.begin(), min_slack.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col0] = 1;
            const std::size_t row0 = col_owner[col0];
            double delta = kInf;
            std::size_t col1 = 0;
            for (std::size_t c = 1; c <= n; ++c) {
                if (used[c]) continue;
                const double reduced = at(row0 - 1, c - 1) - row_potential[row0] - col_potential[c];
                if (reduced < min_slack[c]) {
                    min_slack[c] = reduced;
                    way[c] = col0;
                }
                if (min_slack[c] < delta) {
                    delta = min_slack[c];
                    col1 = c;
                }
            }
            for (std::size_t c = 0; c <= n; ++c) {
                if (used[c]) {
                    row_potential[col_owner[c]] += delta;
                    col_potential[c] -= delta;
                } else {
                    min_slack[c] -= delta;
                }
            }
            col0 = col1;
        } while (col_owner[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            col_owner[col0] = col_owner[col1];
            col0 = col1;
        } while (col0 != 0);
    }

    std::vector<std::size_t> row_to_col(n, n);
    for (std::size_t c = 1; c <= n; ++c) {
        if (col_owner[c] != 0) row_to_col[col_owner[c] - 1] = c - 1;
    }
    std::vector<char> col_matched(n_cols, 0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t c = row_to_col[r];
        if (c < n_cols) {
            result.matches.emplace_back(r, c);
            result.total_cost += cost(r, c);
            col_matched[c] = 1;
        } else {
            result.unmatched_rows.push_back(r);
        }
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (!col_matched[c]) result.unmatched_cols.push_back(c);
    }
    return result;
}

/// Which cues enter the association cost. Only the combined mode is the
/// tracker's normal operation; the trajectory-only mode exists for ablation.
enum class CostMode {
    kTrajectoryAndAppearance,
    kTrajectoryOnly,
};

template <typename T>
concept PredictedTrack = requires(const T& t) {
    { t.predicted } -> std::convertible_to<Location3D>;
    { t.embedding } -> std::convertible_to<std::span<const float>>;
};

template <typename T>
concept EmbeddedDetection = requires(const T& t) {
    { t.location } -> std::convertible_to<Location3D>;
    { t.embedding } -> std::convertible_to<std::span<const float>>;
};

/// C(i, j) = trajectory_cost(prediction_i, location_j) + appearance_cost(track_i, detection_j).
template <PredictedTrack Track, EmbeddedDetection Detection>
CostMatrix build_cost_matrix(std::span<const Track> tracks, std::span<const Detection> detections,
                             double body_height_m,
                             CostMode mode = CostMode::kTrajectoryAndAppearance) {
    CostMatrix cost(tracks.size(), detections.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < detections.size(); ++j) {
            double c = trajectory_cost(tracks[i].predicted, detections[j].location, body_height_m);
            if (mode == CostMode::kTrajectoryAndAppearance) {
                c += appearance_cost(tracks[i].embedding, detections[j].embedding);
            }
            cost(i, j) = c;
        }
    }
    return cost;
}

}  // namespace panotrack

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptx/pipeline.hpp"
#include "ptx/study.hpp"

namespace ptx {

/// Mann-Whitney AUC: P(pos > neg) + 0.5 P(pos == neg), via average ranks.
/// Throws DegenerateLabels if either side is empty.
double auc(std::span<const double> positives, std::span<const double> negatives);
double auc(std::span<const double> scores, const std::vector<bool>& labels);

/// 100 * (auc_stratum - auc_all) / auc_all. Requires auc_all > 0.
double pct_change(double auc_all, double auc_stratum);

/// Half-away-from-zero rounding to one decimal, for display.
double round_display(double value) noexcept;

enum class Method { A, B, C, EnsAC, EnsABC };

std::string_view method_key(Method m) noexcept;  // "a", "b", "c", "ens_ac", "ens_abc"
std::string_view method_name(Method m) noexcept;
std::optional<Method> parse_method(std::string_view key) noexcept;
/// Score the method assigns to a completed result.
double method_score(Method m, const PtxScores& s) noexcept;

struct EvalLabel {
    bool pneumothorax = false;
    bool chest_tube = false;
    std::optional<TubeType> tube_type;
};

struct MethodRow {
    std::string key;
    std::string name;
    std::optional<double> auc_all;
    std::optional<double> auc_no_tubes;
    std::optional<double> auc_only_tubes;
    std::optional<double> pct_change_no_tubes;
};

struct StrataSizes {
    std::size_t n_all = 0;
    std::size_t n_pos_all = 0;
    std::size_t n_no_tubes = 0;
    std::size_t n_pos_no_tubes = 0;
    std::size_t n_only_tubes = 0;
    std::size_t n_pos_only_tubes = 0;
};

struct EvalTable {
    std::vector<MethodRow> rows;
    StrataSizes sizes;
    /// Studies without pneumothorax scores (non-frontal or errored).
    std::size_t n_excluded = 0;
    /// Chest-tube classifier AUCs by tube type, when labels allow.
    std::optional<double> tube_auc_standard;
    std::optional<double> tube_auc_pigtail;
};

/// Stratifies by the ground-truth tube label: all, no tubes, only tubes.
/// Strata with degenerate labels yield absent AUCs. Throws Misaligned when
/// the spans differ in length.
EvalTable stratified_eval(std::span<const StudyResult> results, std::span<const EvalLabel> labels,
                          std::span<const Method> methods);

/// Aligned text table: Method | AUC (all data) | AUC (no tubes) |
/// AUC (only tubes) | AUC % change with no tubes.
std::string format_table(const EvalTable& table);

}  // namespace ptx

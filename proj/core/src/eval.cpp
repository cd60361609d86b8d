#include "ptx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ptx/error.hpp"

namespace ptx {

double auc(std::span<const double> positives, std::span<const double> negatives) {
    if (positives.empty() || negatives.empty()) {
        throw Error(ErrorCode::DegenerateLabels, "AUC needs at least one positive and one negative");
    }
    struct Item {
        double score;
        bool positive;
    };
    std::vector<Item> items;
    items.reserve(positives.size() + negatives.size());
    for (double s : positives) items.push_back({s, true});
    for (double s : negatives) items.push_back({s, false});
    for (const auto& it : items) {
        if (!std::isfinite(it.score)) throw Error(ErrorCode::InvalidArgument, "AUC scores must be finite");
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

    // Sum of 1-based average ranks of the positives, kept doubled so every
    // intermediate is an exact integer.
    double rank_sum_x2 = 0.0;
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i;
        std::size_t pos_in_run = 0;
        while (j < items.size() && items[j].score == items[i].score) {
            pos_in_run += items[j].positive ? 1 : 0;
            ++j;
        }
        // Ranks i+1 .. j average to (i + 1 + j) / 2.
        rank_sum_x2 += static_cast<double>(pos_in_run) * static_cast<double>(i + 1 + j);
        i = j;
    }
    const double n_pos = static_cast<double>(positives.size());
    const double n_neg = static_cast<double>(negatives.size());
    const double u_x2 = rank_sum_x2 - n_pos * (n_pos + 1.0);
    return u_x2 / (2.0 * n_pos * n_neg);
}

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::Misaligned, "scores and labels differ in length");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
    return auc(pos, neg);
}

double pct_change(double auc_all, double auc_stratum) {
    if (!(auc_all > 0.0)) throw Error(ErrorCode::InvalidArgument, "pct_change needs auc_all > 0");
    return 100.0 * (auc_stratum - auc_all) / auc_all;
}

double round_display(double value) noexcept {
    const double r = std::round(value * 10.0) / 10.0;
    return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

std::string_view method_key(Method m) noexcept {
    switch (m) {
        case Method::A: return "a";
        case Method::B: return "b";
        case Method::C: return "c";
        case Method::EnsAC: return "ens_ac";
        case Method::EnsABC: return "ens_abc";
    }
    return "?";
}

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::A: return "A - DN full image";
        case Method::B: return "B - DN apical/basilar";
        case Method::C: return "C - U-Net";
        case Method::EnsAC: return "Ensemble A + C";
        case Method::EnsABC: return "Ensemble A + B + C";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view key) noexcept {
    for (auto m : {Method::A, Method::B, Method::C, Method::EnsAC, Method::EnsABC}) {
        if (method_key(m) == key) return m;
    }
    return std::nullopt;
}

double method_score(Method m, const PtxScores& s) noexcept {
    switch (m) {
        case Method::A: return s.a_full;
        case Method::B: return s.b_patch;
        case Method::C: return s.c_seg;
        case Method::EnsAC: return s.ens_ac;
        case Method::EnsABC: return s.ens_abc;
    }
    return 0.0;
}

namespace {

std::optional<double> auc_or_absent(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) return std::nullopt;
    return auc(pos, neg);
}

struct Split {
    std::vector<double> pos, neg;
};

}  // namespace

EvalTable stratified_eval(std::span<const StudyResult> results, std::span<const EvalLabel> labels,
                          std::span<const Method> methods) {
    if (results.size() != labels.size()) {
        throw Error(ErrorCode::Misaligned, std::to_string(results.size()) + " results vs " +
                                               std::to_string(labels.size()) + " labels");
    }
    EvalTable table;
    std::vector<std::size_t> included;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].complete()) {
            ++table.n_excluded;
            continue;
        }
        included.push_back(i);
        const EvalLabel& l = labels[i];
        ++table.sizes.n_all;
        table.sizes.n_pos_all += l.pneumothorax;
        if (l.chest_tube) {
            ++table.sizes.n_only_tubes;
            table.sizes.n_pos_only_tubes += l.pneumothorax;
        } else {
            ++table.sizes.n_no_tubes;
            table.sizes.n_pos_no_tubes += l.pneumothorax;
        }
    }

    for (Method m : methods) {
        Split all, no_tubes, only_tubes;
        for (std::size_t i : included) {
            const double s = method_score(m, *results[i].scores);
            const bool pos = labels[i].pneumothorax;
            (pos ? all.pos : all.neg).push_back(s);
            Split& stratum = labels[i].chest_tube ? only_tubes : no_tubes;
            (pos ? stratum.pos : stratum.neg).push_back(s);
        }
        MethodRow row;
        row.key = std::string(method_key(m));
        row.name = std::string(method_name(m));
        row.auc_all = auc_or_absent(all.pos, all.neg);
        row.auc_no_tubes = auc_or_absent(no_tubes.pos, no_tubes.neg);
        row.auc_only_tubes = auc_or_absent(only_tubes.pos, only_tubes.neg);
        if (row.auc_all && row.auc_no_tubes && *row.auc_all > 0.0) {
            row.pct_change_no_tubes = pct_change(*row.auc_all, *row.auc_no_tubes);
        }
        table.rows.push_back(std::move(row));
    }

    Split standard, pigtail;
    for (std::size_t i : included) {
        const EvalLabel& l = labels[i];
        const bool is_pigtail = l.chest_tube && l.tube_type == TubeType::Pigtail;
        const bool is_standard = l.chest_tube && !is_pigtail;
        (is_standard ? standard.pos : standard.neg).push_back(results[i].tube->standard);
        (is_pigtail ? pigtail.pos : pigtail.neg).push_back(results[i].tube->pigtail);
    }
    table.tube_auc_standard = auc_or_absent(standard.pos, standard.neg);
    table.tube_auc_pigtail = auc_or_absent(pigtail.pos, pigtail.neg);
    return table;
}

namespace {

std::string fmt_auc(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string fmt_pct(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", round_display(*v));
    return buf;
}

}  // namespace

std::string format_table(const EvalTable& table) {
    const std::vector<std::string> header = {"Method", "AUC (all data)", "AUC (no tubes)", "AUC (only tubes)",
                                             "AUC % change with no tubes"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : table.rows) {
        cells.push_back({r.name, fmt_auc(r.auc_all), fmt_auc(r.auc_no_tubes), fmt_auc(r.auc_only_tubes),
                         fmt_pct(r.pct_change_no_tubes)});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << "  ";
            const std::size_t pad = width[c] - row[c].size();
            if (c == 0) {
                out << row[c] << std::string(pad, ' ');
            } else {
                out << std::string(pad, ' ') << row[c];
            }
        }
        out << '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& row : cells) emit(row);

    const auto& s = table.sizes;
    out << "\nstrata: all n=" << s.n_all << " (pos " << s.n_pos_all << "), no tubes n=" << s.n_no_tubes << " (pos "
        << s.n_pos_no_tubes << "), only tubes n=" << s.n_only_tubes << " (pos " << s.n_pos_only_tubes << ")";
    if (table.n_excluded > 0) out << ", excluded " << table.n_excluded;
    out << '\n';
    if (table.tube_auc_standard || table.tube_auc_pigtail) {
        out << "chest tube AUC: standard " << fmt_auc(table.tube_auc_standard) << ", pigtail "
            << fmt_auc(table.tube_auc_pigtail) << '\n';
    }
    return out.str();
}

}  // namespace ptx

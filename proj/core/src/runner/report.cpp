#include "nilmtune/runner/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace nilmtune::runner {

namespace {

std::string fmt(double v, const char* pattern = "%.6g") {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

double aux_or_nan(const hpo::Trial& t, const std::string& key) {
    const auto it = t.aux.find(key);
    return it == t.aux.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

std::string family_of(const hpo::Trial& t) { return t.config.text("family", "?"); }

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::ofstream open(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

void write_svg(const std::vector<FamilyBest>& rows, const std::filesystem::path& file) {
    const double bar_h = 22, gap = 6, left = 110, width = 420, top = 30;
    const double height = top + static_cast<double>(rows.size()) * (bar_h + gap) + 20;
    double max_mae = 0.0;
    for (const auto& r : rows) max_mae = std::max(max_mae, r.mae);
    if (max_mae <= 0.0) max_mae = 1.0;

    auto out = open(file);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(left + width + 90, "%.0f") << "\" height=\""
        << fmt(height, "%.0f") << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<text x=\"" << fmt(left, "%.0f") << "\" y=\"18\" font-weight=\"bold\">Best validation MAE per family (W)</text>\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double y = top + static_cast<double>(i) * (bar_h + gap);
        const double w = width * rows[i].mae / max_mae;
        out << "<text x=\"" << fmt(left - 8, "%.0f") << "\" y=\"" << fmt(y + 15, "%.1f")
            << "\" text-anchor=\"end\">" << escape_xml(rows[i].family) << "</text>\n"
            << "<rect x=\"" << fmt(left, "%.0f") << "\" y=\"" << fmt(y, "%.1f") << "\" width=\"" << fmt(w, "%.2f")
            << "\" height=\"" << fmt(bar_h, "%.0f") << "\" fill=\"#4a7ab5\"/>\n"
            << "<text x=\"" << fmt(left + w + 6, "%.2f") << "\" y=\"" << fmt(y + 15, "%.1f") << "\">"
            << fmt(rows[i].mae, "%.3f") << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace

std::vector<FamilyBest> family_best(const hpo::TrialHistory& history) {
    std::map<std::string, FamilyBest> by_family;
    for (const auto& t : history) {
        const std::string f = family_of(t);
        auto [it, inserted] = by_family.try_emplace(f, FamilyBest{f, std::numeric_limits<double>::infinity(),
                                                                  std::numeric_limits<double>::quiet_NaN(), t.id, 0});
        FamilyBest& b = it->second;
        ++b.trials;
        if (t.ok() && (t.loss < b.mae || (t.loss == b.mae && t.id < b.trial_id) || std::isinf(b.mae))) {
            b.mae = t.loss;
            b.accuracy = aux_or_nan(t, "accuracy");
            b.trial_id = t.id;
        }
    }
    std::vector<FamilyBest> out;
    for (auto& [f, b] : by_family) out.push_back(b);
    std::stable_sort(out.begin(), out.end(), [](const FamilyBest& a, const FamilyBest& b) { return a.mae < b.mae; });
    return out;
}

std::vector<std::filesystem::path> emit_report(const hpo::TrialHistory& history, const std::filesystem::path& dir) {
    if (history.empty()) throw std::invalid_argument("emit_report: empty history");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create report directory " + dir.string() + ": " + ec.message());

    const auto best = family_best(history);
    std::vector<std::filesystem::path> files;

    {
        files.push_back(dir / "summary.md");
        auto out = open(files.back());
        out << "# Per-family best MAE\n\n| rank | family | best MAE (W) | trial | trials |\n|---|---|---|---|---|\n";
        for (std::size_t i = 0; i < best.size(); ++i) {
            out << "| " << i + 1 << " | " << best[i].family << " | " << fmt(best[i].mae, "%.3f") << " | "
                << best[i].trial_id << " | " << best[i].trials << " |\n";
        }
        out << "\n# Accuracy vs MAE\n\n| family | accuracy | MAE (W) |\n|---|---|---|\n";
        for (const auto& b : best) {
            out << "| " << b.family << " | " << (std::isnan(b.accuracy) ? "n/a" : fmt(b.accuracy, "%.4f")) << " | "
                << fmt(b.mae, "%.3f") << " |\n";
        }
    }
    {
        files.push_back(dir / "family_best.csv");
        auto out = open(files.back());
        out << "family,best_mae,accuracy,trial_id,trials\n";
        for (const auto& b : best) {
            out << b.family << ',' << fmt(b.mae) << ',' << fmt(b.accuracy) << ',' << b.trial_id << ',' << b.trials
                << '\n';
        }
    }
    {
        files.push_back(dir / "trials.csv");
        auto out = open(files.back());
        out << "id,family,status,mae,accuracy,best_so_far\n";
        double running = std::numeric_limits<double>::infinity();
        for (const auto& t : history) {
            if (t.ok()) running = std::min(running, t.loss);
            out << t.id << ',' << family_of(t) << ',' << hpo::to_string(t.status) << ','
                << (t.ok() ? fmt(t.loss) : "") << ',' << fmt(aux_or_nan(t, "accuracy")) << ',' << fmt(running)
                << '\n';
        }
    }
    files.push_back(dir / "family_best_mae.svg");
    std::vector<FamilyBest> finite;
    std::copy_if(best.begin(), best.end(), std::back_inserter(finite), [](const FamilyBest& b) { return std::isfinite(b.mae); });
    write_svg(finite, files.back());
    return files;
}

}  // namespace nilmtune::runner

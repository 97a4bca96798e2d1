#include "cmec/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace cmec {

std::string metrics_csv_header() {
    return "scheme,sweep_value,replication,episode,mean_system_utility,mean_latency_s,mean_ne_rounds,"
           "violations,unconverged,mean_reward,mean_loss,explore_rate";
}

std::string slots_csv_header() {
    return "scheme,sweep_value,replication,episode,slot,ue,request,decision,ratio_es,es_share,ratio_cn,"
           "rate_bps,t_e2e_s,max_latency_s,utility";
}

std::string format_metrics_row(const EpisodeRow& r) {
    return fmt::format("{},{},{},{},{:.10g},{:.10g},{:.10g},{},{},{:.10g},{:.10g},{:.6g}\n", to_string(r.scheme),
                       r.sweep_value, r.replication, r.episode, r.mean_system_utility, r.mean_latency_s,
                       r.mean_ne_rounds, r.violations, r.unconverged, r.mean_reward, r.mean_loss, r.explore_rate);
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw std::runtime_error(where + ": '" + s + "' is not a number");
    return v;
}

int to_int(const std::string& s, const std::string& where) {
    const double v = to_double(s, where);
    if (v != std::floor(v)) throw std::runtime_error(where + ": '" + s + "' is not an integer");
    return static_cast<int>(v);
}

/// Data lines of a CSV with the expected header; comment lines are skipped.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    const auto width = split(header).size();
    std::string line;
    bool seen_header = false;
    long long n = 0;
    while (std::getline(f, line)) {
        ++n;
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            if (line != header) throw std::runtime_error(path.string() + ": unexpected header");
            seen_header = true;
            continue;
        }
        auto cells = split(line);
        if (cells.size() != width) {
            throw std::runtime_error(fmt::format("{}:{}: expected {} columns, found {}", path.string(), n, width,
                                                 cells.size()));
        }
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw std::runtime_error(path.string() + ": missing header");
    return rows;
}

}  // namespace

std::vector<EpisodeRow> read_metrics_csv(const std::filesystem::path& path) {
    std::vector<EpisodeRow> rows;
    for (const auto& c : read_csv(path, metrics_csv_header())) {
        const std::string where = path.string();
        EpisodeRow r;
        r.scheme = parse_scheme(c[0]);
        r.sweep_value = c[1];
        r.replication = to_int(c[2], where);
        r.episode = to_int(c[3], where);
        r.mean_system_utility = to_double(c[4], where);
        r.mean_latency_s = to_double(c[5], where);
        r.mean_ne_rounds = to_double(c[6], where);
        r.violations = to_int(c[7], where);
        r.unconverged = to_int(c[8], where);
        r.mean_reward = to_double(c[9], where);
        r.mean_loss = to_double(c[10], where);
        r.explore_rate = to_double(c[11], where);
        rows.push_back(r);
    }
    return rows;
}

Summary aggregate(const std::vector<EpisodeRow>& rows, int tail) {
    if (rows.empty()) throw std::invalid_argument("aggregate: empty dataset");
    struct RepAcc {
        std::vector<const EpisodeRow*> episodes;
    };
    // Keyed by first appearance so the summary follows the dataset order.
    std::vector<std::pair<std::string, Scheme>> order;
    std::map<std::pair<std::string, int>, std::map<int, RepAcc>> groups;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.sweep_value, static_cast<int>(r.scheme));
        if (!groups.count(key)) order.emplace_back(r.sweep_value, r.scheme);
        groups[key][r.replication].episodes.push_back(&r);
    }

    Summary s;
    for (const auto& [value, scheme] : order) {
        const auto& reps = groups[{value, static_cast<int>(scheme)}];
        std::vector<double> utility;
        std::vector<double> latency;
        for (const auto& [rep, acc] : reps) {
            auto eps = acc.episodes;
            std::sort(eps.begin(), eps.end(), [](auto* a, auto* b) { return a->episode < b->episode; });
            const std::size_t from = (tail > 0 && eps.size() > static_cast<std::size_t>(tail)) ? eps.size() - tail : 0;
            double u = 0.0;
            double l = 0.0;
            for (std::size_t i = from; i < eps.size(); ++i) {
                u += eps[i]->mean_system_utility;
                l += eps[i]->mean_latency_s;
            }
            const double n = static_cast<double>(eps.size() - from);
            utility.push_back(u / n);
            latency.push_back(l / n);
        }
        SummaryRow row;
        row.scheme = scheme;
        row.sweep_value = value;
        row.replications = static_cast<int>(utility.size());
        for (double u : utility) row.mean_utility += u;
        row.mean_utility /= row.replications;
        for (double l : latency) row.mean_latency_s += l;
        row.mean_latency_s /= row.replications;
        if (row.replications > 1) {
            double ss = 0.0;
            for (double u : utility) ss += (u - row.mean_utility) * (u - row.mean_utility);
            row.std_utility = std::sqrt(ss / (row.replications - 1));
        }
        s.rows.push_back(row);
    }

    for (const auto& ours : s.rows) {
        if (ours.scheme != Scheme::DdqnEpg) continue;
        for (const auto& base : s.rows) {
            if (base.sweep_value != ours.sweep_value || base.scheme == Scheme::DdqnEpg) continue;
            Improvement imp;
            imp.sweep_value = ours.sweep_value;
            imp.baseline = base.scheme;
            if (base.mean_utility != 0.0) {
                imp.percent = (ours.mean_utility - base.mean_utility) / std::abs(base.mean_utility) * 100.0;
            }
            s.improvements.push_back(imp);
        }
    }
    return s;
}

nlohmann::json to_json(const Summary& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"scheme", to_string(r.scheme)},
                        {"sweep_value", r.sweep_value},
                        {"replications", r.replications},
                        {"mean_utility", r.mean_utility},
                        {"std_utility", r.std_utility},
                        {"mean_latency_s", r.mean_latency_s}});
    }
    nlohmann::json imps = nlohmann::json::array();
    for (const auto& i : s.improvements) {
        imps.push_back({{"sweep_value", i.sweep_value},
                        {"baseline", to_string(i.baseline)},
                        {"improvement_pct", i.percent ? nlohmann::json(*i.percent) : nlohmann::json(nullptr)}});
    }
    return {{"rows", rows}, {"improvements", imps}};
}

CsvAudit audit_slots_csv(const std::filesystem::path& path) {
    CsvAudit a;
    const auto rows = read_csv(path, slots_csv_header());
    const std::string where = path.string();
    auto report = [&](const std::string& slot, const std::string& what) {
        ++a.violations;
        if (a.messages.size() < 50) a.messages.push_back(slot + ": " + what);
    };
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        auto same_slot = [&](std::size_t k) {
            for (int c = 0; c < 5; ++c) {
                if (rows[k][c] != rows[i][c]) return false;
            }
            return true;
        };
        while (j < rows.size() && same_slot(j)) ++j;
        const std::string slot =
            fmt::format("{} {} rep {} ep {} slot {}", rows[i][0], rows[i][1], rows[i][2], rows[i][3], rows[i][4]);
        ++a.slots;

        std::map<int, int> cn_users;
        double beta_sum = 0.0;
        for (std::size_t k = i; k < j; ++k) {
            const auto& c = rows[k];
            ++a.rows;
            const std::string ue = "UE" + c[5];
            const int request = to_int(c[6], where);
            const int d = to_int(c[7], where);
            const double ratio_es = to_double(c[8], where);
            const double share = to_double(c[9], where);
            const double ratio_cn = to_double(c[10], where);
            const double t_e2e = to_double(c[12], where);
            const double t_max = to_double(c[13], where);
            beta_sum += share;

            if (d < kLocal) report(slot, ue + " decision below local");
            if (d == kLocal && (ratio_es != 0.0 || ratio_cn != 0.0)) report(slot, ue + " local with offloaded work");
            if (d == kEdgeServer && ratio_cn != 0.0) report(slot, ue + " ES decision with CN work");
            if (d >= 1 && ++cn_users[d] > 1) report(slot, "CN" + c[7] + " shared by several UEs");
            auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
            if (!unit(ratio_es) || !unit(share) || !unit(ratio_cn)) report(slot, ue + " ratio or share outside [0,1]");
            if (d != kLocal) {
                if (request == 0) report(slot, ue + " offloads without a task");
                if (std::abs(ratio_es + ratio_cn - 1.0) > 1e-9) report(slot, ue + " offloading ratios do not sum to 1");
                if (!(t_e2e <= t_max)) report(slot, ue + " latency above deadline");
            }
        }
        if (beta_sum > 1.0 + 1e-9) report(slot, "ES shares sum above 1");
        i = j;
    }
    return a;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, const std::vector<std::string>& x_ticks) {
    const double w = 720, h = 440, left = 80, right = 160, top = 40, bottom = 60;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
        for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 1, y1 += 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" font-family=\"sans-serif\" "
        "font-size=\"12\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        w, h);
    svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                       (left + w - right) / 2, escape(title));
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, h - bottom,
                       w - right);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top,
                       h - bottom);
    for (int t = 0; t <= 5; ++t) {
        const double y = y0 + (y1 - y0) * t / 5.0;
        svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 6, py(y) + 4, y);
        svg += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", left, py(y),
                           w - right, py(y));
    }
    if (!x_ticks.empty()) {
        for (std::size_t i = 0; i < x_ticks.size(); ++i) {
            svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                               px(static_cast<double>(i)), h - bottom + 18, escape(x_ticks[i]));
        }
    } else {
        for (int t = 0; t <= 5; ++t) {
            const double x = x0 + (x1 - x0) * t / 5.0;
            svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(x),
                               h - bottom + 18, x);
        }
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (left + w - right) / 2, h - 16,
                       escape(x_label));
    svg += fmt::format("<text transform=\"translate(20,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                       (top + h - bottom) / 2, escape(y_label));
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % std::size(kPalette)];
        std::string pts;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            pts += fmt::format("{:.1f},{:.1f} ", px(series[s].x[i]), py(series[s].y[i]));
        }
        svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, pts);
        if (series[s].x.size() == 1) {
            svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n", px(series[s].x[0]),
                               py(series[s].y[0]), color);
        }
        const double ly = top + 10 + 18.0 * s;
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                           w - right + 12, ly, w - right + 32, color);
        svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", w - right + 38, ly + 4, escape(series[s].name));
    }
    svg += "</svg>\n";
    return svg;
}

void write_plots(const std::filesystem::path& dir, const std::vector<EpisodeRow>& rows, const Summary& summary,
                 SweepAxis axis) {
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << text;
    };

    // Utility per episode, averaged over replications, for the first sweep value.
    if (!rows.empty()) {
        const std::string first_value = rows.front().sweep_value;
        std::map<int, std::map<int, std::pair<double, int>>> acc;
        std::vector<Scheme> order;
        for (const auto& r : rows) {
            if (r.sweep_value != first_value) continue;
            const int key = static_cast<int>(r.scheme);
            if (!acc.count(key)) order.push_back(r.scheme);
            auto& cell = acc[key][r.episode];
            cell.first += r.mean_system_utility;
            cell.second += 1;
        }
        std::vector<Series> series;
        for (auto scheme : order) {
            Series s{to_string(scheme), {}, {}};
            for (const auto& [ep, cell] : acc[static_cast<int>(scheme)]) {
                s.x.push_back(ep + 1);
                s.y.push_back(cell.first / cell.second);
            }
            series.push_back(std::move(s));
        }
        const std::string title = first_value == "-" ? "System utility per episode"
                                                     : "System utility per episode (" + first_value + ")";
        write("utility_vs_episode.svg", svg_line_chart(title, "episode", "mean system utility", series));
    }

    if (axis != SweepAxis::None) {
        std::vector<std::string> ticks;
        for (const auto& r : summary.rows) {
            if (std::find(ticks.begin(), ticks.end(), r.sweep_value) == ticks.end()) ticks.push_back(r.sweep_value);
        }
        std::vector<Series> series;
        for (const auto& r : summary.rows) {
            auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == to_string(r.scheme); });
            if (it == series.end()) {
                series.push_back({to_string(r.scheme), {}, {}});
                it = series.end() - 1;
            }
            it->x.push_back(static_cast<double>(std::find(ticks.begin(), ticks.end(), r.sweep_value) - ticks.begin()));
            it->y.push_back(r.mean_utility);
        }
        const std::string x_label = axis == SweepAxis::UeCount   ? "number of UEs"
                                    : axis == SweepAxis::CnCount ? "number of COIN nodes"
                                                                 : "task type";
        write("utility_vs_sweep.svg", svg_line_chart("Mean system utility", x_label, "mean system utility", series, ticks));
    }
}

}  // namespace cmec

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cmec/harness.hpp"

namespace cmec {

std::string format_metrics_row(const EpisodeRow& r);
std::string slots_csv_header();

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG line chart; x tick labels default to the x values.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, const std::vector<std::string>& x_ticks = {});

/// utility_vs_episode.svg, plus utility_vs_sweep.svg for sweeps.
void write_plots(const std::filesystem::path& dir, const std::vector<EpisodeRow>& rows, const Summary& summary,
                 SweepAxis axis);

}  // namespace cmec

#include "sparsesense/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sparsesense {

namespace {

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_fields(const std::string &line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

// Non-empty lines with their 1-based line numbers; trailing CR removed.
std::vector<std::pair<int, std::string>> split_lines(const std::string &text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            out.emplace_back(number, line);
        }
    }
    return out;
}

[[noreturn]] void fail(int line, const std::string &what) {
    throw ParseError(fmt::format("line {}: {}", line, what));
}

double parse_number(const std::string &field, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        fail(line, "not a number: '" + field + "'");
    }
    return v;
}

int parse_cycle(const std::string &field, int line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        fail(line, "cycle is not an integer: '" + field + "'");
    }
    return v;
}

std::string format_rows(std::vector<ReportRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow &a, const ReportRow &b) {
        if (a.strategy != b.strategy) {
            return a.strategy < b.strategy;
        }
        return a.param < b.param;
    });
    std::string out = "strategy,param,mean_rmse,stddev,repeats\n";
    for (const auto &r : rows) {
        out += fmt::format("{},{:.4f},{:.4f},{:.4f},{}\n", r.strategy, r.param,
                           r.mean_rmse, r.stddev, r.repeats);
    }
    return out;
}

} // namespace

MeasurementPanel parse_panel_csv_text(const std::string &text) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw ParseError("line 1: missing header");
    }
    const auto header = split_fields(lines.front().second);
    if (header.front() != "cycle" || header.size() < 2) {
        fail(lines.front().first, "header must be 'cycle,<name_0>,...'");
    }
    const int S = static_cast<int>(header.size()) - 1;
    std::vector<Location> locations = make_locations(S);
    for (int s = 0; s < S; ++s) {
        const auto &name = header[static_cast<std::size_t>(s) + 1];
        if (name.empty()) fail(lines.front().first, fmt::format("empty station name in column {}", s + 2));
        if (std::count(header.begin() + 1, header.begin() + 1 + s, name) > 0) {
            fail(lines.front().first, fmt::format("duplicate station name '{}'", name));
        }
        locations[static_cast<std::size_t>(s)].name = name;
    }

    std::size_t row = 1;
    if (row < lines.size() && lines[row].second.rfind("coord,", 0) == 0) {
        const auto &[number, line] = lines[row];
        const auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != S + 1) {
            fail(number, fmt::format("expected {} fields, got {}", S + 1, fields.size()));
        }
        for (int s = 0; s < S; ++s) {
            const auto &f = fields[static_cast<std::size_t>(s) + 1];
            const auto colon = f.find(':');
            if (colon == std::string::npos) {
                fail(number, "coordinate must be 'x:y', got '" + f + "'");
            }
            locations[static_cast<std::size_t>(s)].coords =
                Point(parse_number(f.substr(0, colon), number),
                      parse_number(f.substr(colon + 1), number));
        }
        ++row;
    }

    const int T = static_cast<int>(lines.size() - row);
    if (T < 1) {
        fail(lines.back().first + 1, "panel has no data rows");
    }
    Matrix values = Matrix::Zero(S, T);
    Mask mask = Mask::Constant(S, T, false);
    for (int t = 0; t < T; ++t, ++row) {
        const auto &[number, line] = lines[row];
        const auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != S + 1) {
            fail(number, fmt::format("expected {} fields, got {}", S + 1, fields.size()));
        }
        if (parse_cycle(fields.front(), number) != t) {
            fail(number, fmt::format("expected cycle {}, got '{}'", t, fields.front()));
        }
        for (int s = 0; s < S; ++s) {
            const auto &f = fields[static_cast<std::size_t>(s) + 1];
            if (!f.empty()) {
                values(s, t) = parse_number(f, number);
                mask(s, t) = true;
            }
        }
    }
    return MeasurementPanel(std::move(locations), std::move(values), std::move(mask));
}

MeasurementPanel parse_panel_csv(const std::filesystem::path &path) {
    return parse_panel_csv_text(read_file(path));
}

MeasurementPanel parse_long_csv_text(const std::string &text) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw ParseError("line 1: missing header");
    }
    if (lines.front().second != "cycle,station,value") {
        fail(lines.front().first, "header must be 'cycle,station,value'");
    }
    if (lines.size() < 2) {
        fail(lines.front().first + 1, "panel has no data rows");
    }
    std::vector<std::string> stations;
    std::map<std::string, int> station_index;
    std::map<std::pair<int, int>, std::optional<double>> cells;
    int max_cycle = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto &[number, line] = lines[i];
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            fail(number, fmt::format("expected 3 fields, got {}", fields.size()));
        }
        const int cycle = parse_cycle(fields[0], number);
        if (cycle < 0) {
            fail(number, "negative cycle");
        }
        auto [it, inserted] =
            station_index.emplace(fields[1], static_cast<int>(stations.size()));
        if (inserted) {
            stations.push_back(fields[1]);
        }
        std::optional<double> value;
        if (!fields[2].empty()) {
            value = parse_number(fields[2], number);
        }
        if (!cells.emplace(std::make_pair(cycle, it->second), value).second) {
            fail(number, fmt::format("duplicate entry for cycle {} station '{}'", cycle,
                                     fields[1]));
        }
        max_cycle = std::max(max_cycle, cycle);
    }
    const int S = static_cast<int>(stations.size());
    const int T = max_cycle + 1;
    std::vector<bool> seen(static_cast<std::size_t>(T), false);
    for (const auto &entry : cells) {
        seen[static_cast<std::size_t>(entry.first.first)] = true;
    }
    for (int t = 0; t < T; ++t) {
        if (!seen[static_cast<std::size_t>(t)]) {
            throw ParseError(fmt::format("cycles are not consecutive: cycle {} missing", t));
        }
    }
    std::vector<Location> locations = make_locations(S);
    for (int s = 0; s < S; ++s) {
        locations[static_cast<std::size_t>(s)].name = stations[static_cast<std::size_t>(s)];
    }
    Matrix values = Matrix::Zero(S, T);
    Mask mask = Mask::Constant(S, T, false);
    for (const auto &[key, value] : cells) {
        if (value) {
            values(key.second, key.first) = *value;
            mask(key.second, key.first) = true;
        }
    }
    return MeasurementPanel(std::move(locations), std::move(values), std::move(mask));
}

MeasurementPanel parse_long_csv(const std::filesystem::path &path) {
    return parse_long_csv_text(read_file(path));
}

std::string format_panel_csv(const MeasurementPanel &panel) {
    const int S = panel.num_locations();
    std::string out = "cycle";
    for (const auto &loc : panel.locations()) {
        out += "," + loc.name;
    }
    out += "\n";
    if (has_coords(panel.locations())) {
        out += "coord";
        for (const auto &loc : panel.locations()) {
            out += fmt::format(",{}:{}", loc.coords->x(), loc.coords->y());
        }
        out += "\n";
    }
    for (int t = 0; t < panel.num_cycles(); ++t) {
        out += std::to_string(t);
        for (int s = 0; s < S; ++s) {
            out += ",";
            if (panel.observed(s, t)) {
                out += fmt::format("{}", panel.value(s, t));
            }
        }
        out += "\n";
    }
    return out;
}

void write_text(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_panel_csv(const MeasurementPanel &panel, const std::filesystem::path &path) {
    write_text(path, format_panel_csv(panel));
}

std::string format_report_csv(std::vector<ReportRow> rows) {
    return format_rows(std::move(rows));
}

void write_report_csv(std::vector<ReportRow> rows, const std::filesystem::path &path) {
    write_text(path, format_rows(std::move(rows)));
}

std::string format_series_csv(std::span<const CycleReport> reports) {
    std::string out = "t,cycle_rmse,lambda_tu,lambda_if,lambda_at\n";
    for (const auto &r : reports) {
        const std::string err = r.scored ? fmt::format("{:.6f}", r.cycle_rmse) : "";
        out += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", r.t, err, r.lambdas[0],
                           r.lambdas[1], r.lambdas[2]);
    }
    return out;
}

void write_series_csv(std::span<const CycleReport> reports,
                      const std::filesystem::path &path) {
    write_text(path, format_series_csv(reports));
}

std::string format_truth_csv(const DsarModel &truth, SyntheticWeights kind,
                             std::uint64_t seed) {
    std::string out = "location,lag,phi,weight_kind,seed\n";
    for (int s = 0; s < truth.num_locations(); ++s) {
        for (int i = 1; i <= truth.lags(); ++i) {
            out += fmt::format("{},{},{},{},{}\n", s, i, truth.phi(s, i - 1),
                               to_string(kind), seed);
        }
    }
    return out;
}

std::string RunManifest::format() const {
    std::string out;
    out += "config_checksum=" + config_checksum + "\n";
    out += fmt::format("seed={}\n", seed);
    out += "start=" + started + "\n";
    out += "end=" + finished + "\n";
    for (const auto &a : artifacts) {
        out += "artifact=" + a + "\n";
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace sparsesense

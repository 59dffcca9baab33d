#pragma once

#include "snipsde/error.hpp"
#include "snipsde/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

namespace snipsde {

/// Two times are "the same gap" when they differ by at most this much
/// (in normalized units).
inline constexpr double regular_gap_tolerance = 1e-9;

struct Observation {
    double time = 0.0;
    double value = 0.0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// All measurements of one subject, sorted strictly increasing in time.
struct SnippetRecord {
    std::string subject_id;
    std::vector<Observation> observations;

    std::size_t size() const noexcept { return observations.size(); }
    /// At least two measurements: contributes to model fitting.
    bool trainable() const noexcept { return observations.size() >= 2; }
    double span() const noexcept {
        return observations.empty() ? 0.0 : observations.back().time - observations.front().time;
    }
};

/// Invertible affine map between raw user time units and normalized time:
/// normalized = (raw - offset) / scale.
struct AffineTimeMap {
    double offset = 0.0;
    double scale = 1.0;

    double to_normalized(double raw) const noexcept { return (raw - offset) / scale; }
    double to_raw(double normalized) const noexcept { return normalized * scale + offset; }
    /// Convert a duration (no offset).
    double duration_to_normalized(double raw) const noexcept { return raw / scale; }
    double duration_to_raw(double normalized) const noexcept { return normalized * scale; }
    bool is_identity() const noexcept { return offset == 0.0 && scale == 1.0; }

    friend bool operator==(const AffineTimeMap&, const AffineTimeMap&) = default;
};

struct GapSummary {
    std::size_t count = 0;
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

/// A cohort of snippet records. Times are stored in normalized units;
/// `time_map` recovers the original scale. Construct through `from_records`
/// so the derived fields stay consistent.
class SnippetDataset {
public:
    SnippetDataset() = default;

    static SnippetDataset from_records(std::vector<SnippetRecord> records, AffineTimeMap map = {},
                                       std::optional<std::pair<double, double>> domain = std::nullopt) {
        SnippetDataset ds;
        ds.records_ = std::move(records);
        ds.time_map_ = map;

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto& rec : ds.records_) {
            if (rec.observations.empty())
                throw ValidationError("subject '" + rec.subject_id + "' has no observations");
            std::sort(rec.observations.begin(), rec.observations.end(),
                      [](const Observation& a, const Observation& b) { return a.time < b.time; });
            for (std::size_t j = 0; j < rec.observations.size(); ++j) {
                const auto& o = rec.observations[j];
                if (!std::isfinite(o.time) || !std::isfinite(o.value))
                    throw ValidationError("subject '" + rec.subject_id + "' has a non-finite observation");
                if (j > 0 && o.time <= rec.observations[j - 1].time)
                    throw ValidationError("subject '" + rec.subject_id + "' has duplicate time " +
                                          std::to_string(map.to_raw(o.time)));
            }
            lo = std::min(lo, rec.observations.front().time);
            hi = std::max(hi, rec.observations.back().time);
            ds.span_bound_ = std::max(ds.span_bound_, rec.span());
        }

        if (domain) {
            ds.domain_ = *domain;
        } else if (ds.records_.empty()) {
            ds.domain_ = {0.0, 1.0};
        } else {
            ds.domain_ = {lo, hi > lo ? hi : lo + 1.0};
        }
        if (!(ds.domain_.first < ds.domain_.second))
            throw ValidationError("dataset domain must satisfy a < b");
        if (!ds.records_.empty() &&
            (lo < ds.domain_.first - regular_gap_tolerance || hi > ds.domain_.second + regular_gap_tolerance))
            throw ValidationError("observation times fall outside the dataset domain");

        // Regular means every within-subject gap equals one common spacing.
        bool any_gap = false;
        bool regular = true;
        double first_gap = 0.0;
        for (const auto& rec : ds.records_) {
            for (std::size_t j = 1; j < rec.observations.size(); ++j) {
                const double gap = rec.observations[j].time - rec.observations[j - 1].time;
                if (!any_gap) {
                    first_gap = gap;
                    any_gap = true;
                } else if (std::abs(gap - first_gap) > regular_gap_tolerance) {
                    regular = false;
                }
            }
        }
        ds.regular_ = any_gap && regular;
        ds.spacing_ = ds.regular_ ? first_gap : 0.0;
        return ds;
    }

    const std::vector<SnippetRecord>& records() const noexcept { return records_; }
    std::pair<double, double> domain() const noexcept { return domain_; }
    /// Largest within-subject span (normalized units).
    double span_bound() const noexcept { return span_bound_; }
    /// True when every consecutive within-subject gap equals `spacing()`.
    bool regular() const noexcept { return regular_; }
    /// The common gap of a regular design, 0 otherwise.
    double spacing() const noexcept { return spacing_; }
    const AffineTimeMap& time_map() const noexcept { return time_map_; }

    std::size_t trainable_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.trainable(); }));
    }

    std::vector<double> gaps() const {
        std::vector<double> out;
        for (const auto& rec : records_)
            for (std::size_t j = 1; j < rec.observations.size(); ++j)
                out.push_back(rec.observations[j].time - rec.observations[j - 1].time);
        return out;
    }

    GapSummary gap_summary() const {
        auto g = gaps();
        GapSummary s;
        s.count = g.size();
        if (g.empty()) return s;
        std::sort(g.begin(), g.end());
        s.min = g.front();
        s.max = g.back();
        const std::size_t mid = g.size() / 2;
        s.median = g.size() % 2 ? g[mid] : 0.5 * (g[mid - 1] + g[mid]);
        return s;
    }

private:
    std::vector<SnippetRecord> records_;
    std::pair<double, double> domain_{0.0, 1.0};
    double span_bound_ = 0.0;
    double spacing_ = 0.0;
    bool regular_ = false;
    AffineTimeMap time_map_;
};

/// Column mapping for delimited snippet files.
struct ColumnSchema {
    std::string id_column = "subject_id";
    std::string time_column = "time";
    std::string value_column = "value";
    char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) noexcept {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline bool is_comment_or_blank(std::string_view line) noexcept {
    line = trim(line);
    return line.empty() || line.front() == '#';
}

/// Shortest decimal text that round-trips a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Parse a delimited snippet table (header row required; lines starting
/// with '#' are ignored). Records appear in order of first occurrence.
inline SnippetDataset read_snippets(std::istream& in, const ColumnSchema& schema = {}, bool normalize = false) {
    std::string line;
    std::size_t row = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, line)) {
        ++row;
        if (detail::is_comment_or_blank(line)) continue;
        header_line = line;
        header = detail::split(header_line, schema.delimiter);
        break;
    }
    if (header.empty()) throw SchemaError("snippet file has no header row");

    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t id_col = column(schema.id_column);
    const std::size_t time_col = column(schema.time_column);
    const std::size_t value_col = column(schema.value_column);
    const std::size_t needed = std::max({id_col, time_col, value_col}) + 1;

    std::vector<SnippetRecord> records;
    std::unordered_map<std::string, std::size_t> index;
    std::map<std::pair<std::size_t, double>, std::size_t> seen;

    while (std::getline(in, line)) {
        ++row;
        if (detail::is_comment_or_blank(line)) continue;
        const auto cells = detail::split(line, schema.delimiter);
        if (cells.size() < needed)
            throw ParseError("row " + std::to_string(row) + ": expected at least " + std::to_string(needed) +
                                 " cells, found " + std::to_string(cells.size()),
                             row);
        const auto t = detail::parse_double(cells[time_col]);
        if (!t)
            throw ParseError("row " + std::to_string(row) + ": non-numeric time '" + std::string(cells[time_col]) + "'",
                             row);
        const auto v = detail::parse_double(cells[value_col]);
        if (!v)
            throw ParseError(
                "row " + std::to_string(row) + ": non-numeric value '" + std::string(cells[value_col]) + "'", row);

        std::string id(cells[id_col]);
        auto [it, inserted] = index.try_emplace(id, records.size());
        if (inserted) records.push_back(SnippetRecord{id, {}});
        if (auto [dup, fresh] = seen.try_emplace({it->second, *t}, row); !fresh)
            throw ValidationError("row " + std::to_string(row) + ": duplicate time " + std::string(cells[time_col]) +
                                  " for subject '" + id + "' (first seen on row " + std::to_string(dup->second) + ")");
        records[it->second].observations.push_back({*t, *v});
    }

    AffineTimeMap map;
    std::optional<std::pair<double, double>> domain;
    if (normalize && !records.empty()) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& r : records)
            for (const auto& o : r.observations) {
                lo = std::min(lo, o.time);
                hi = std::max(hi, o.time);
            }
        map.offset = lo;
        map.scale = hi > lo ? hi - lo : 1.0;
        for (auto& r : records)
            for (auto& o : r.observations) o.time = map.to_normalized(o.time);
        domain = std::pair{0.0, 1.0};
    }
    return SnippetDataset::from_records(std::move(records), map, domain);
}

inline SnippetDataset load_snippets(const std::string& path, const ColumnSchema& schema = {}, bool normalize = false) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open snippet file '" + path + "'");
    return read_snippets(in, schema, normalize);
}

/// Write in raw time units (the inverse of the stored map), one row per
/// observation. `comment` lines are emitted first, each prefixed with "# ".
inline void write_snippets(std::ostream& out, const SnippetDataset& ds, const std::vector<std::string>& comment = {},
                           const ColumnSchema& schema = {}) {
    for (const auto& c : comment) out << "# " << c << '\n';
    const char d = schema.delimiter;
    out << schema.id_column << d << schema.time_column << d << schema.value_column << '\n';
    for (const auto& rec : ds.records())
        for (const auto& o : rec.observations)
            out << rec.subject_id << d << detail::format_double(ds.time_map().to_raw(o.time)) << d
                << detail::format_double(o.value) << '\n';
}

inline void save_snippets(const std::string& path, const SnippetDataset& ds, const std::vector<std::string>& comment = {},
                          const ColumnSchema& schema = {}) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write snippet file '" + path + "'");
    write_snippets(out, ds, comment, schema);
}

/// One regression observation: predictor from the earlier measurement,
/// response the next measurement of the same subject.
struct TrainingPair {
    Predictor z;
    double y = 0.0;
    std::string subject_id;
};

enum class PairMode { regular, irregular };

/// Contiguous within-subject pairs: a record with N observations yields
/// N - 1 pairs. Regular mode emits (x, t) predictors and requires a regular
/// dataset; irregular mode emits (x, t, s).
inline std::vector<TrainingPair> make_training_pairs(const SnippetDataset& ds, PairMode mode) {
    if (mode == PairMode::regular && !ds.regular())
        throw ModeMismatchError("regular pairing requested but the dataset's within-subject gaps are not all equal "
                                "(use irregular mode)");
    std::vector<TrainingPair> pairs;
    for (const auto& rec : ds.records()) {
        const auto& obs = rec.observations;
        for (std::size_t j = 1; j < obs.size(); ++j) {
            const auto& a = obs[j - 1];
            const auto& b = obs[j];
            const Predictor z = mode == PairMode::regular ? Predictor::regular(a.value, a.time)
                                                          : Predictor::irregular(a.value, a.time, b.time);
            pairs.push_back({z, b.value, rec.subject_id});
        }
    }
    if (pairs.empty())
        throw InsufficientDataError("no subject has two or more measurements; nothing to train on");
    return pairs;
}

} // namespace snipsde

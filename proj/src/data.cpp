#include "loglearn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "loglearn/eval.hpp"
#include "loglearn/rng.hpp"

namespace loglearn {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& s) {
    if (s.empty()) return true;
    std::string l;
    for (char c : s) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return l == "nan" || l == "na" || l == "null" || l == "none";
}

std::optional<double> parse_double(const std::string& s) {
    if (is_missing(s)) return std::nullopt;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

struct RawRow {
    double depth;
    std::array<double, kNumChannels> channels;
    std::string formation, class_label, rock_type;
    std::optional<double> lat, lon;
};

void check_rule(const PairingRule& rule, int64_t l) {
    if (rule.mode == PairingMode::close_well_linking && rule.close_param <= static_cast<double>(l))
        throw ConfigError("close_well_linking: close_param must exceed the interval length");
}

std::vector<size_t> eligible_wells(const std::vector<WellRecord>& wells, int64_t min_len) {
    std::vector<size_t> out;
    for (size_t i = 0; i < wells.size(); ++i)
        if (static_cast<int64_t>(wells[i].length()) >= min_len) out.push_back(i);
    return out;
}

struct Draw {
    size_t well;
    int64_t start;
};

Draw draw_interval(const std::vector<WellRecord>& wells, const std::vector<size_t>& eligible,
                   int64_t l, std::mt19937_64& rng) {
    std::uniform_int_distribution<size_t> pick_well(0, eligible.size() - 1);
    size_t w = eligible[pick_well(rng)];
    int64_t max_start = static_cast<int64_t>(wells[w].length()) - l;
    std::uniform_int_distribution<int64_t> pick_start(0, max_start);
    return Draw{w, pick_start(rng)};
}

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("dataset cache: truncated file");
    return v;
}

void write_sample(std::ostream& os, const IntervalSample& s) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(s.well_id.size()));
    os.write(s.well_id.data(), static_cast<std::streamsize>(s.well_id.size()));
    write_pod<double>(os, s.start_depth);
    write_pod<uint64_t>(os, static_cast<uint64_t>(s.start_index));
    write_pod<uint64_t>(os, static_cast<uint64_t>(s.values.rows()));
    os.write(reinterpret_cast<const char*>(s.values.data()),
             static_cast<std::streamsize>(s.values.numel() * sizeof(double)));
}

IntervalSample read_sample(std::istream& is) {
    IntervalSample s;
    uint32_t len = read_pod<uint32_t>(is);
    s.well_id.resize(len);
    is.read(s.well_id.data(), len);
    s.start_depth = read_pod<double>(is);
    s.start_index = static_cast<int64_t>(read_pod<uint64_t>(is));
    int64_t rows = static_cast<int64_t>(read_pod<uint64_t>(is));
    std::vector<double> values(static_cast<size_t>(rows * kNumChannels));
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw DataError("dataset cache: truncated sample");
    s.values = Tensor({rows, kNumChannels}, std::move(values));
    return s;
}

constexpr char kDatasetMagic[4] = {'L', 'L', 'D', 'S'};
constexpr uint32_t kDatasetVersion = 1;

std::ofstream open_dataset_writer(const std::string& path, uint32_t kind, uint64_t count) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("dataset cache: cannot open for write: " + path);
    os.write(kDatasetMagic, 4);
    write_pod<uint32_t>(os, kDatasetVersion);
    write_pod<uint32_t>(os, kind);
    write_pod<uint64_t>(os, count);
    return os;
}

std::ifstream open_dataset_reader(const std::string& path, uint32_t expect_kind,
                                  uint64_t* count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("dataset cache: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw DataError("dataset cache: bad magic in " + path);
    if (read_pod<uint32_t>(is) != kDatasetVersion)
        throw DataError("dataset cache: unsupported version in " + path);
    if (read_pod<uint32_t>(is) != expect_kind)
        throw DataError("dataset cache: wrong record kind in " + path);
    *count = read_pod<uint64_t>(is);
    return is;
}

}  // namespace

std::vector<WellRecord> load_wells(std::istream& source, const ColumnSchema& schema,
                                   std::vector<std::string>* warnings) {
    std::string header;
    if (!std::getline(source, header)) throw DataError("load_wells: empty input");
    char delim = std::count(header.begin(), header.end(), '\t') >
                         std::count(header.begin(), header.end(), ',')
                     ? '\t'
                     : ',';
    std::vector<std::string> cols = split_line(header, delim);
    for (auto& c : cols) c = trim(c);

    auto col_index = [&](const std::string& logical) -> int {
        std::string actual = schema.resolve(logical);
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == actual) return static_cast<int>(i);
        return -1;
    };

    int idx_well = col_index("well_id");
    int idx_depth = col_index("depth");
    std::array<int, kNumChannels> idx_channel{};
    if (idx_well < 0) throw DataError("load_wells: missing required column \"well_id\"");
    if (idx_depth < 0) throw DataError("load_wells: missing required column \"depth\"");
    for (int c = 0; c < kNumChannels; ++c) {
        idx_channel[static_cast<size_t>(c)] = col_index(kChannelNames[static_cast<size_t>(c)]);
        if (idx_channel[static_cast<size_t>(c)] < 0)
            throw DataError(std::string("load_wells: missing required column \"") +
                            kChannelNames[static_cast<size_t>(c)] + "\"");
    }
    int idx_formation = col_index("formation");
    int idx_class = col_index("class");
    int idx_rock = col_index("rock_type");
    int idx_lat = col_index("latitude");
    int idx_lon = col_index("longitude");

    std::vector<std::string> order;  // well ids by first appearance
    std::map<std::string, std::vector<RawRow>> rows;
    std::string line;
    while (std::getline(source, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_line(line, delim);
        auto field = [&](int idx) -> std::string {
            return (idx >= 0 && idx < static_cast<int>(fields.size()))
                       ? trim(fields[static_cast<size_t>(idx)])
                       : "";
        };
        std::string well = field(idx_well);
        if (well.empty()) continue;
        auto depth = parse_double(field(idx_depth));
        if (!depth) continue;
        RawRow row;
        row.depth = *depth;
        bool complete = true;
        for (int c = 0; c < kNumChannels; ++c) {
            auto v = parse_double(field(idx_channel[static_cast<size_t>(c)]));
            if (!v) {
                complete = false;  // missing core channel: drop row
                break;
            }
            row.channels[static_cast<size_t>(c)] = *v;
        }
        if (!complete) continue;
        row.formation = field(idx_formation);
        row.class_label = field(idx_class);
        row.rock_type = field(idx_rock);
        row.lat = parse_double(field(idx_lat));
        row.lon = parse_double(field(idx_lon));
        if (!rows.count(well)) order.push_back(well);
        rows[well].push_back(std::move(row));
    }

    std::vector<WellRecord> wells;
    for (const std::string& id : order) {
        auto& rlist = rows[id];
        std::stable_sort(rlist.begin(), rlist.end(),
                         [](const RawRow& a, const RawRow& b) { return a.depth < b.depth; });
        WellRecord w;
        w.well_id = id;
        for (const RawRow& r : rlist) {
            if (!w.depth.empty() && r.depth <= w.depth.back()) continue;  // duplicate depth
            w.depth.push_back(r.depth);
            for (int c = 0; c < kNumChannels; ++c)
                w.channels[static_cast<size_t>(c)].push_back(r.channels[static_cast<size_t>(c)]);
            if (idx_rock >= 0) w.rock_type.push_back(r.rock_type);
            if (w.formation.empty()) w.formation = r.formation;
            if (w.class_label.empty()) w.class_label = r.class_label;
            if (!w.latitude && r.lat) w.latitude = r.lat;
            if (!w.longitude && r.lon) w.longitude = r.lon;
        }
        if (w.depth.empty()) {
            if (warnings)
                warnings->push_back("well " + id + " empty after filtering; skipped");
            continue;
        }
        wells.push_back(std::move(w));
    }
    if (warnings) {
        for (const auto& w : wells) {
            for (size_t i = 1; i < w.depth.size(); ++i) {
                if (std::fabs(w.depth[i] - w.depth[i - 1] - 1.0) > 1e-9) {
                    warnings->push_back("well " + w.well_id + " has non-unit depth spacing");
                    break;
                }
            }
        }
    }
    return wells;
}

std::vector<WellRecord> load_wells_file(const std::string& path, const ColumnSchema& schema,
                                        std::vector<std::string>* warnings) {
    std::ifstream is(path);
    if (!is) throw DataError("load_wells: cannot open " + path);
    return load_wells(is, schema, warnings);
}

ChannelStats compute_channel_stats(const std::vector<WellRecord>& wells) {
    ChannelStats stats{};
    for (int c = 0; c < kNumChannels; ++c) {
        double sum = 0.0;
        int64_t n = 0;
        for (const auto& w : wells)
            for (double v : w.channels[static_cast<size_t>(c)]) {
                sum += v;
                ++n;
            }
        if (n < 2)
            throw DataError(std::string("standardize: need at least 2 samples for channel ") +
                            kChannelNames[static_cast<size_t>(c)]);
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& w : wells)
            for (double v : w.channels[static_cast<size_t>(c)]) ss += (v - mean) * (v - mean);
        stats.mean[static_cast<size_t>(c)] = mean;
        stats.stddev[static_cast<size_t>(c)] = std::sqrt(ss / static_cast<double>(n));
    }
    return stats;
}

void standardize(std::vector<WellRecord>& wells, const ChannelStats& stats,
                 std::vector<std::string>* warnings) {
    for (int c = 0; c < kNumChannels; ++c) {
        double mean = stats.mean[static_cast<size_t>(c)];
        double sd = stats.stddev[static_cast<size_t>(c)];
        if (sd <= 0.0) {
            if (warnings)
                warnings->push_back(std::string("channel ") +
                                    kChannelNames[static_cast<size_t>(c)] +
                                    " has zero variance; centered only");
            sd = 1.0;
        }
        for (auto& w : wells)
            for (double& v : w.channels[static_cast<size_t>(c)]) v = (v - mean) / sd;
    }
}

int pair_label(const std::string& well_a, const std::string& well_b, double start_a,
               double start_b, const PairingRule& rule) {
    if (well_a != well_b) return 0;
    if (rule.mode == PairingMode::well_linking) return 1;
    return std::fabs(start_a - start_b) <= rule.close_param ? 1 : 0;
}

IntervalSample extract_interval(const WellRecord& well, int64_t start_index, int64_t l) {
    if (start_index < 0 || start_index + l > static_cast<int64_t>(well.length()))
        throw DataError("extract_interval: range out of bounds for well " + well.well_id);
    IntervalSample s;
    s.well_id = well.well_id;
    s.start_index = start_index;
    s.start_depth = well.depth[static_cast<size_t>(start_index)];
    s.values = Tensor({l, kNumChannels});
    for (int64_t t = 0; t < l; ++t)
        for (int c = 0; c < kNumChannels; ++c)
            s.values.at(t, c) = well.channels[static_cast<size_t>(c)]
                                             [static_cast<size_t>(start_index + t)];
    return s;
}

std::vector<IntervalPair> sample_pairs(const std::vector<WellRecord>& wells, int64_t l,
                                       const PairingRule& rule, int64_t n, uint64_t seed) {
    check_rule(rule, l);
    if (n < 1) throw ConfigError("sample_pairs: n must be >= 1");
    auto eligible = eligible_wells(wells, l);
    if (eligible.empty()) throw DataError("sample_pairs: no well has at least l measurements");
    auto rng = make_rng(seed);

    int64_t want_pos = n - n / 2;
    int64_t want_neg = n / 2;
    std::vector<IntervalPair> out;
    out.reserve(static_cast<size_t>(n));
    int64_t have_pos = 0, have_neg = 0;
    int64_t max_attempts = 2000 * n + 100000;
    for (int64_t attempt = 0; attempt < max_attempts && have_pos + have_neg < n; ++attempt) {
        Draw da = draw_interval(wells, eligible, l, rng);
        Draw db = draw_interval(wells, eligible, l, rng);
        const WellRecord& wa = wells[da.well];
        const WellRecord& wb = wells[db.well];
        double sa = wa.depth[static_cast<size_t>(da.start)];
        double sb = wb.depth[static_cast<size_t>(db.start)];
        int label = pair_label(wa.well_id, wb.well_id, sa, sb, rule);
        if (label == 1 && have_pos >= want_pos) continue;
        if (label == 0 && have_neg >= want_neg) continue;
        IntervalPair p;
        p.a = extract_interval(wa, da.start, l);
        p.b = extract_interval(wb, db.start, l);
        p.label = label;
        out.push_back(std::move(p));
        (label ? have_pos : have_neg)++;
    }
    if (have_pos < want_pos)
        throw DataError("sample_pairs: cannot satisfy label class 1 (similar pairs)");
    if (have_neg < want_neg)
        throw DataError("sample_pairs: cannot satisfy label class 0 (dissimilar pairs)");
    return out;
}

std::vector<IntervalTriplet> sample_triplets(const std::vector<WellRecord>& wells, int64_t l,
                                             const PairingRule& rule, int64_t n, uint64_t seed) {
    check_rule(rule, l);
    if (n < 0) throw ConfigError("sample_triplets: n must be >= 0");
    std::vector<IntervalTriplet> out;
    if (n == 0) return out;
    auto eligible = eligible_wells(wells, l);
    if (eligible.empty()) throw DataError("sample_triplets: no well has at least l measurements");
    auto rng = make_rng(seed);

    out.reserve(static_cast<size_t>(n));
    int64_t max_attempts = 2000 * n + 100000;
    int64_t attempts = 0;
    while (static_cast<int64_t>(out.size()) < n) {
        Draw anchor = draw_interval(wells, eligible, l, rng);
        const WellRecord& wa = wells[anchor.well];
        double sa = wa.depth[static_cast<size_t>(anchor.start)];

        // Positive: another interval of the anchor well satisfying label 1.
        std::optional<Draw> positive;
        int64_t max_start = static_cast<int64_t>(wa.length()) - l;
        std::uniform_int_distribution<int64_t> pick_start(0, max_start);
        for (int tries = 0; tries < 1000; ++tries) {
            int64_t s = pick_start(rng);
            double sp = wa.depth[static_cast<size_t>(s)];
            if (pair_label(wa.well_id, wa.well_id, sa, sp, rule) == 1) {
                positive = Draw{anchor.well, s};
                break;
            }
            if (++attempts > max_attempts)
                throw DataError("sample_triplets: cannot satisfy the positive (label 1) class");
        }
        if (!positive) continue;

        // Negative: any interval satisfying label 0 against the anchor.
        std::optional<Draw> negative;
        for (int tries = 0; tries < 1000; ++tries) {
            Draw d = draw_interval(wells, eligible, l, rng);
            const WellRecord& wn = wells[d.well];
            double sn = wn.depth[static_cast<size_t>(d.start)];
            if (pair_label(wa.well_id, wn.well_id, sa, sn, rule) == 0) {
                negative = d;
                break;
            }
            if (++attempts > max_attempts)
                throw DataError("sample_triplets: cannot satisfy the negative (label 0) class");
        }
        if (!negative) continue;

        IntervalTriplet t;
        t.anchor = extract_interval(wa, anchor.start, l);
        t.positive = extract_interval(wells[positive->well], positive->start, l);
        t.negative = extract_interval(wells[negative->well], negative->start, l);
        out.push_back(std::move(t));
        if (++attempts > max_attempts)
            throw DataError("sample_triplets: attempt budget exhausted");
    }
    return out;
}

std::vector<IntervalSample> sample_intervals(const std::vector<WellRecord>& wells, int64_t l,
                                             int64_t n, uint64_t seed, int64_t horizon,
                                             std::vector<Tensor>* next_values) {
    auto eligible = eligible_wells(wells, l + horizon);
    if (eligible.empty())
        throw DataError("sample_intervals: no well has at least l + horizon measurements");
    auto rng = make_rng(seed);
    std::vector<IntervalSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<size_t> pick_well(0, eligible.size() - 1);
        size_t w = eligible[pick_well(rng)];
        int64_t max_start = static_cast<int64_t>(wells[w].length()) - l - horizon;
        std::uniform_int_distribution<int64_t> pick_start(0, max_start);
        int64_t start = pick_start(rng);
        out.push_back(extract_interval(wells[w], start, l));
        if (next_values && horizon > 0) {
            Tensor nv({horizon, kNumChannels});
            for (int64_t t = 0; t < horizon; ++t)
                for (int c = 0; c < kNumChannels; ++c)
                    nv.at(t, c) = wells[w].channels[static_cast<size_t>(c)]
                                                   [static_cast<size_t>(start + l + t)];
            next_values->push_back(std::move(nv));
        }
    }
    return out;
}

IntervalSample augment_noise(const IntervalSample& sample, double sigma, uint64_t seed) {
    IntervalSample out = sample;
    if (sigma == 0.0) return out;
    int64_t l = sample.values.rows();
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int c = 0; c < kNumChannels; ++c) {
        double mean = 0.0;
        for (int64_t t = 0; t < l; ++t) mean += sample.values.at(t, c);
        mean /= static_cast<double>(l);
        double ss = 0.0;
        for (int64_t t = 0; t < l; ++t) {
            double d = sample.values.at(t, c) - mean;
            ss += d * d;
        }
        double channel_std = std::sqrt(ss / static_cast<double>(l));
        for (int64_t t = 0; t < l; ++t)
            out.values.at(t, c) += sigma * channel_std * normal(rng);
    }
    return out;
}

std::pair<IntervalSample, std::vector<bool>> augment_mask(const IntervalSample& sample, double p,
                                                          uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("augment_mask: p must be in [0, 1]");
    IntervalSample out = sample;
    int64_t l = sample.values.rows();
    std::vector<bool> mask(static_cast<size_t>(l), false);
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int64_t t = 0; t < l; ++t) {
        if (u(rng) < p) {
            mask[static_cast<size_t>(t)] = true;
            for (int c = 0; c < kNumChannels; ++c) out.values.at(t, c) = 0.0;
        }
    }
    return {std::move(out), std::move(mask)};
}

std::map<std::string, int> geographic_labels(const std::vector<WellRecord>& wells, int k,
                                             uint64_t seed) {
    std::string missing;
    for (const auto& w : wells)
        if (!w.latitude || !w.longitude) missing += (missing.empty() ? "" : ", ") + w.well_id;
    if (!missing.empty())
        throw DataError("geographic_labels: wells missing coordinates: " + missing);
    if (wells.empty()) throw DataError("geographic_labels: no wells");
    Tensor points({static_cast<int64_t>(wells.size()), 2});
    for (size_t i = 0; i < wells.size(); ++i) {
        points.at(static_cast<int64_t>(i), 0) = *wells[i].latitude;
        points.at(static_cast<int64_t>(i), 1) = *wells[i].longitude;
    }
    Labeling labels = kmeans(points, k, seed);
    std::map<std::string, int> out;
    for (size_t i = 0; i < wells.size(); ++i) out[wells[i].well_id] = labels[i];
    return out;
}

void save_pairs(const std::string& path, const std::vector<IntervalPair>& pairs) {
    auto os = open_dataset_writer(path, 1, pairs.size());
    for (const auto& p : pairs) {
        write_sample(os, p.a);
        write_sample(os, p.b);
        write_pod<uint8_t>(os, static_cast<uint8_t>(p.label));
    }
    if (!os) throw DataError("dataset cache: write failed: " + path);
}

std::vector<IntervalPair> load_pairs(const std::string& path) {
    uint64_t count = 0;
    auto is = open_dataset_reader(path, 1, &count);
    std::vector<IntervalPair> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        IntervalPair p;
        p.a = read_sample(is);
        p.b = read_sample(is);
        p.label = read_pod<uint8_t>(is);
        out.push_back(std::move(p));
    }
    return out;
}

void save_triplets(const std::string& path, const std::vector<IntervalTriplet>& triplets) {
    auto os = open_dataset_writer(path, 2, triplets.size());
    for (const auto& t : triplets) {
        write_sample(os, t.anchor);
        write_sample(os, t.positive);
        write_sample(os, t.negative);
    }
    if (!os) throw DataError("dataset cache: write failed: " + path);
}

std::vector<IntervalTriplet> load_triplets(const std::string& path) {
    uint64_t count = 0;
    auto is = open_dataset_reader(path, 2, &count);
    std::vector<IntervalTriplet> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        IntervalTriplet t;
        t.anchor = read_sample(is);
        t.positive = read_sample(is);
        t.negative = read_sample(is);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace loglearn

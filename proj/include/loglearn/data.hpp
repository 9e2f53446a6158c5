#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loglearn/tensor.hpp"

namespace loglearn {

inline constexpr int kNumChannels = 4;
// Channel order of the training tuple: DRHO, DENS, GR, DTC.
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {"DRHO", "DENS", "GR",
                                                                        "DTC"};

// One well's depth-indexed 4-channel log curves plus optional labels.
struct WellRecord {
    std::string well_id;
    std::string formation;    // empty when absent
    std::string class_label;  // empty when absent
    std::optional<double> latitude;
    std::optional<double> longitude;
    std::vector<double> depth;  // strictly increasing, feet
    std::array<std::vector<double>, kNumChannels> channels;
    std::vector<std::string> rock_type;  // per depth; empty when absent

    size_t length() const { return depth.size(); }
};

// Fixed-length window of a well's channels; the training unit.
struct IntervalSample {
    std::string well_id;
    double start_depth = 0.0;
    int64_t start_index = 0;
    Tensor values;  // [l, 4]
};

struct IntervalPair {
    IntervalSample a, b;
    int label = 0;  // computed by the pairing rule, never hand-set
};

struct IntervalTriplet {
    IntervalSample anchor, positive, negative;
};

enum class PairingMode { well_linking, close_well_linking };

struct PairingRule {
    PairingMode mode = PairingMode::well_linking;
    double close_param = 0.0;  // feet; required iff mode == close_well_linking
};

// Maps logical column names (well_id, depth, DRHO, DENS, GR, DTC, and the
// optional formation, class, rock_type, latitude, longitude) to the actual
// header names of the input table. Unmapped names default to themselves.
struct ColumnSchema {
    std::map<std::string, std::string> columns;
    std::string resolve(const std::string& logical) const {
        auto it = columns.find(logical);
        return it == columns.end() ? logical : it->second;
    }
};

// Parses a delimited (comma or tab, auto-detected) text table into wells.
// Rows missing any core channel are dropped; empty wells are skipped with a
// warning. A missing required column is fatal and names the column.
std::vector<WellRecord> load_wells(std::istream& source, const ColumnSchema& schema,
                                   std::vector<std::string>* warnings = nullptr);
std::vector<WellRecord> load_wells_file(const std::string& path, const ColumnSchema& schema,
                                        std::vector<std::string>* warnings = nullptr);

struct ChannelStats {
    std::array<double, kNumChannels> mean{};
    std::array<double, kNumChannels> stddev{};  // 0 marks a degenerate channel
};

ChannelStats compute_channel_stats(const std::vector<WellRecord>& wells);

// In-place per-channel standardization with the given (training) stats.
// Zero-variance channels are centered only, with a warning.
void standardize(std::vector<WellRecord>& wells, const ChannelStats& stats,
                 std::vector<std::string>* warnings = nullptr);

// The pairing label as a pure function of its inputs.
int pair_label(const std::string& well_a, const std::string& well_b, double start_a,
               double start_b, const PairingRule& rule);

// Exactly n pairs with label classes balanced 50/50 within +-1; candidate
// draws are identical across rules for a fixed seed, so close_well_linking
// with close_param above every well length reproduces well_linking exactly.
std::vector<IntervalPair> sample_pairs(const std::vector<WellRecord>& wells, int64_t l,
                                       const PairingRule& rule, int64_t n, uint64_t seed);

std::vector<IntervalTriplet> sample_triplets(const std::vector<WellRecord>& wells, int64_t l,
                                             const PairingRule& rule, int64_t n, uint64_t seed);

// Uniform interval draws (no pairing); horizon > 0 also extracts the next
// `horizon` steps per interval into *next_values for autoregressive targets.
std::vector<IntervalSample> sample_intervals(const std::vector<WellRecord>& wells, int64_t l,
                                             int64_t n, uint64_t seed, int64_t horizon = 0,
                                             std::vector<Tensor>* next_values = nullptr);

// Extracts the interval starting at start_index; throws if out of range.
IntervalSample extract_interval(const WellRecord& well, int64_t start_index, int64_t l);

// Additive Gaussian noise scaled per channel by sigma * channel std of the
// sample; deterministic for a fixed seed.
IntervalSample augment_noise(const IntervalSample& sample, double sigma, uint64_t seed);

// Independently masks each time step with probability p; masked steps are
// set to 0 (the post-standardization channel mean). The mask is returned so
// losses can exclude masked steps.
std::pair<IntervalSample, std::vector<bool>> augment_mask(const IntervalSample& sample, double p,
                                                          uint64_t seed);

// k-means over (latitude, longitude); fatal if any well lacks coordinates.
std::map<std::string, int> geographic_labels(const std::vector<WellRecord>& wells, int k,
                                             uint64_t seed);

// Binary dataset cache (magic "LLDS") for reproducible re-runs.
void save_pairs(const std::string& path, const std::vector<IntervalPair>& pairs);
std::vector<IntervalPair> load_pairs(const std::string& path);
void save_triplets(const std::string& path, const std::vector<IntervalTriplet>& triplets);
std::vector<IntervalTriplet> load_triplets(const std::string& path);

}  // namespace loglearn

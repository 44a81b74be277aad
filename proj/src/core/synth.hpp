#ifndef TXGC_CORE_SYNTH_HPP
#define TXGC_CORE_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "core/ingest.hpp"

namespace txgc {

// Knobs for the synthetic benchmark generator. The generator plants the
// structures the pipeline is built to find: labeled target accounts, their
// dedicated subordinate spokes, and bridge paths between target pairs.
struct SyntheticSpec {
    size_t n_accounts = 2000;
    size_t n_targets = 100;
    double malicious_fraction = 0.5;   // fraction of targets labeled malicious
    double attachment_exponent = 1.0;  // preferential attachment on (deg+1)^a
    double bridge_density = 3.0;       // planted bridge structures per target
    double subordinate_fanout = 2.0;   // mean dedicated spokes per target
    uint64_t seed = 1;
};

struct SyntheticData {
    std::vector<TransactionRecord> transactions;
    std::vector<AccountProfile> profiles;  // every account, labels on targets only
    StudyWindow window;
};

// Per-target activity window lengths in seconds. The class ranges overlap
// on purpose so no single lifecycle feature separates the labels cleanly.
// A target's own transfers always stay inside its window.
constexpr int64_t kMaliciousWindowMin = 10 * 86400;
constexpr int64_t kMaliciousWindowMax = 90 * 86400;
constexpr int64_t kNormalWindowMin = 45 * 86400;
constexpr int64_t kNormalWindowMax = 500 * 86400;

// Deterministic per spec.seed. Malicious targets transact more often in
// shorter activity windows with mildly larger amounts; bridge planting
// prefers same-class target pairs so the bridge web is homophilous. The
// class differences are kept small enough that the labels stay noisy at
// the single-feature level.
SyntheticData synthesize(const SyntheticSpec& spec);

}  // namespace txgc

#endif

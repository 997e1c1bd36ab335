#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace provdistill {

// Desk-scale stand-in for a real audit capture: benign activity follows a
// small set of behavioral templates, attack chains are injected after the
// phase boundary and deviate from every template in their edge-type
// sequences (not in their attributes).
struct SynthConfig {
    uint64_t n_processes = 100;
    uint64_t n_files = 600;
    uint64_t n_sockets = 300;
    uint64_t benign_events = 5000;
    // Share of benign events per template: web, backup, logger, indexer.
    std::vector<double> class_mix = {0.35, 0.2, 0.15, 0.15, 0.15};
    uint32_t attack_chains = 0;
    uint32_t chain_length = 13;
    uint64_t seed = 0;
};

struct ChainStep {
    std::string entity_id;
    std::string kind;  // process | file | socket
};

struct ChainInfo {
    uint32_t chain_id = 0;
    std::vector<ChainStep> steps;
};

struct GroundTruth {
    std::set<std::string> malicious;
    std::vector<ChainInfo> chains;
    int64_t boundary_ts = 0;  // last benign training-phase timestamp
};

struct SynthOutput {
    std::vector<std::string> lines;
    GroundTruth truth;
};

SynthOutput generate(const SynthConfig& cfg);

// Partitions lines by the "ts" field: ts <= boundary goes to train. The
// generator keeps every entity phase-local, so splitting at
// truth.boundary_ts yields a benign-only training side with no dangling
// references on either side.
std::pair<std::vector<std::string>, std::vector<std::string>> split(
    const std::vector<std::string>& lines, int64_t boundary_ts);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace provdistill

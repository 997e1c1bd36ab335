#include "provdistill/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "provdistill/errors.hpp"
#include "provdistill/log_ingest.hpp"
#include "provdistill/io.hpp"
#include "provdistill/rng.hpp"

namespace provdistill {

using nlohmann::json;

namespace {

constexpr int64_t kBaseTs = 1'600'000'000'000'000'000;
constexpr int64_t kTick = 2000;  // benign events sit on even ticks, attacks on odd

constexpr int kWeb = 0, kBackup = 1, kLogger = 2, kIndexer = 3, kMonitor = 4, kNumTemplates = 5;

const char* kWebNames[] = {"httpd", "nginx", "caddy", "tomcat", "lighttpd"};
const char* kBackupNames[] = {"rsync", "tar", "borg", "restic"};
const char* kLoggerNames[] = {"syslogd", "journald", "auditd", "metricsd"};
const char* kIndexerNames[] = {"updatedb", "mlocate", "tracker", "baloo"};
const char* kMonitorNames[] = {"fsmonitd", "aide", "tripwired"};

std::string fmt(const char* pattern, uint64_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, static_cast<unsigned long long>(i));
    return buf;
}

std::string proc_name(int tmpl, uint64_t i) {
    switch (tmpl) {
    case kWeb: return kWebNames[i % std::size(kWebNames)];
    case kBackup: return kBackupNames[i % std::size(kBackupNames)];
    case kLogger: return kLoggerNames[i % std::size(kLoggerNames)];
    case kIndexer: return kIndexerNames[i % std::size(kIndexerNames)];
    default: return kMonitorNames[i % std::size(kMonitorNames)];
    }
}

std::string config_path(uint64_t i) { return fmt("/etc/svc%02llu.conf", i % 16); }
std::string pipe_path(uint64_t i) { return fmt("/run/pipe/svc%02llu", i % 16); }
std::string block_path(uint64_t i) { return fmt("/dev/dump%02llu", i % 8); }
std::string doc_path(uint64_t i) { return fmt("/data/docs/doc%04llu", i % 256); }

class Emitter {
public:
    explicit Emitter(std::vector<std::string>& out) : out_(out) {}

    void declare(const std::string& id, const std::string& type, const AttrList& attrs,
                 int64_t ts) {
        if (!declared_.insert(id).second) return;
        json j;
        j["record_type"] = "entity";
        j["entity_id"] = id;
        j["entity_type"] = type;
        json arr = json::array();
        for (const auto& [k, v] : attrs) arr.push_back(json::array({k, v}));
        j["attrs"] = arr;
        j["ts"] = ts;  // extra field, used by split() only
        out_.push_back(j.dump());
    }

    void event(const std::string& subj, const std::string& obj, int64_t ts, const std::string& op) {
        json j;
        j["record_type"] = "event";
        j["event_id"] = fmt("ev%08llu", event_counter_++);
        j["subject"] = subj;
        j["object"] = obj;
        j["ts"] = ts;
        j["op"] = op;
        out_.push_back(j.dump());
    }

    bool declared(const std::string& id) const { return declared_.count(id) > 0; }

private:
    std::vector<std::string>& out_;
    std::set<std::string> declared_;
    uint64_t event_counter_ = 0;
};

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
    std::vector<double> mix = cfg.class_mix.empty()
                                  ? std::vector<double>{0.35, 0.2, 0.15, 0.15, 0.15}
                                  : cfg.class_mix;
    if (mix.size() != kNumTemplates)
        throw Error(Errc::invalid_config, "class_mix needs one share per template (5)");
    double mix_sum = 0;
    for (double m : mix) {
        if (m < 0) throw Error(Errc::invalid_config, "class_mix shares must be non-negative");
        mix_sum += m;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9)
        throw Error(Errc::invalid_config, "class_mix must sum to 1");
    if (cfg.benign_events > 0 && (cfg.n_processes == 0 || cfg.n_files == 0 || cfg.n_sockets == 0))
        throw Error(Errc::invalid_config, "benign activity needs processes, files, and sockets");
    if (cfg.attack_chains > 0 && cfg.chain_length == 0)
        throw Error(Errc::invalid_config, "attack chains need chain_length >= 1");

    SynthOutput out;
    Emitter emit(out.lines);
    Rng rng(cfg.seed);

    int64_t ts = kBaseTs;
    std::string first_phase1_file;  // recon target for the chains

    // One benign phase; entities are phase-local so the boundary is clean.
    auto run_phase = [&](int phase, uint64_t events) {
        const uint64_t p_lo = phase == 0 ? 0 : (cfg.n_processes + 1) / 2;
        const uint64_t p_hi = phase == 0 ? (cfg.n_processes + 1) / 2 : cfg.n_processes;
        const uint64_t f_lo = phase == 0 ? 0 : (cfg.n_files + 1) / 2;
        const uint64_t f_hi = phase == 0 ? (cfg.n_files + 1) / 2 : cfg.n_files;
        const uint64_t s_lo = phase == 0 ? 0 : (cfg.n_sockets + 1) / 2;
        const uint64_t s_hi = phase == 0 ? (cfg.n_sockets + 1) / 2 : cfg.n_sockets;
        const uint64_t n_proc = p_hi - p_lo, n_file = f_hi - f_lo, n_sock = s_hi - s_lo;
        if (events == 0 || n_proc == 0 || n_file == 0) return;

        // File roles inside the phase slice: configs, logs, archives, docs.
        const uint64_t log_begin = std::min(std::max<uint64_t>(1, n_file / 10), n_file);
        const uint64_t log_end = std::min(log_begin + std::max<uint64_t>(1, n_file / 5), n_file);
        const uint64_t arch_end = std::min(log_end + std::max<uint64_t>(1, n_file / 8), n_file);
        auto pick = [&](uint64_t begin, uint64_t end, uint64_t k) {
            return begin >= end ? f_lo + (k % n_file) : f_lo + begin + (k % (end - begin));
        };
        auto cfg_file = [&](uint64_t k) { return pick(0, log_begin, k); };
        auto log_file = [&](uint64_t k) { return pick(log_begin, log_end, k); };
        auto arch_file = [&](uint64_t k) { return pick(log_end, arch_end, k); };
        auto doc_file = [&](uint64_t k) { return pick(arch_end, n_file, k); };

        // Write-sink roles carry their own entity types, so every behavioral
        // motif has a class of its own.
        auto declare_file = [&](uint64_t idx) {
            const uint64_t rel = idx - f_lo;
            if (rel < log_begin)
                emit.declare(fmt("f%llu", idx), "FILE_OBJECT_FILE", {{"path", config_path(idx)}}, ts);
            else if (rel < log_end)
                emit.declare(fmt("f%llu", idx), "UNNAMED_PIPE_OBJECT", {{"path", pipe_path(idx)}}, ts);
            else if (rel < arch_end)
                emit.declare(fmt("f%llu", idx), "FILE_OBJECT_BLOCK", {{"path", block_path(idx)}}, ts);
            else
                emit.declare(fmt("f%llu", idx), "FILE_OBJECT_FILE", {{"path", doc_path(idx)}}, ts);
        };
        auto declare_sock = [&](uint64_t idx, bool metrics_sink) {
            if (metrics_sink) {
                emit.declare(fmt("s%llu", idx), "FILE_OBJECT_UNIX_SOCKET",
                             {{"path", fmt("/run/metrics/%02llu.sock", idx % 16)}}, ts);
                return;
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), "10.0.%llu.%llu:%llu",
                          static_cast<unsigned long long>((idx % 48) / 8),
                          static_cast<unsigned long long>(idx % 8),
                          static_cast<unsigned long long>(8000 + idx % 6));
            emit.declare(fmt("s%llu", idx), "NET_FLOW_OBJECT", {{"addr", buf}}, ts);
        };

        struct Program {
            uint64_t proc;
            int tmpl;
            uint64_t budget;
            uint64_t step = 0;        // script position (telemetry excluded)
            uint64_t tick = 0;        // every event, drives telemetry cadence
            uint64_t cursor = 0;      // per-program resource rotation
        };
        std::vector<Program> programs;
        // Processes are assigned to templates proportionally to the mix.
        std::vector<uint64_t> tmpl_events(kNumTemplates);
        uint64_t assigned = 0;
        for (int t = 0; t < kNumTemplates; ++t) {
            tmpl_events[t] = static_cast<uint64_t>(std::floor(mix[t] * static_cast<double>(events)));
            assigned += tmpl_events[t];
        }
        tmpl_events[0] += events - assigned;  // remainder to the largest share

        std::vector<int> proc_tmpl(n_proc);
        for (uint64_t k = 0; k < n_proc; ++k) {
            double x = (static_cast<double>(k) + 0.5) / static_cast<double>(n_proc);
            double acc = 0;
            int t = kNumTemplates - 1;
            for (int i = 0; i < kNumTemplates; ++i) {
                acc += mix[i];
                if (x < acc) { t = i; break; }
            }
            proc_tmpl[k] = t;
        }
        std::vector<std::vector<uint64_t>> by_tmpl(kNumTemplates);
        for (uint64_t k = 0; k < n_proc; ++k) by_tmpl[proc_tmpl[k]].push_back(p_lo + k);
        for (int t = 0; t < kNumTemplates; ++t) {
            if (by_tmpl[t].empty() || tmpl_events[t] == 0) continue;
            const uint64_t per = tmpl_events[t] / by_tmpl[t].size();
            uint64_t extra = tmpl_events[t] % by_tmpl[t].size();
            uint64_t rank = 0;
            for (uint64_t p : by_tmpl[t]) {
                Program prog{p, t, per + (extra > 0 ? 1 : 0), 0, 0, 0};
                if (extra > 0) --extra;
                if (t == kMonitor)  // spread scan arcs over the file slice
                    prog.cursor = rank * (n_file / by_tmpl[t].size() + 1);
                ++rank;
                if (prog.budget > 0) programs.push_back(prog);
            }
        }

        // Web accepts rotate over the front of the socket slice; the tail is
        // reserved for the telemetry sinks every process reports to.
        const uint64_t n_accept = std::max<uint64_t>(1, (3 * n_sock) / 4);
        const uint64_t n_metric = std::max<uint64_t>(1, n_sock - n_accept);
        auto metric_sock = [&](uint64_t proc) { return s_lo + n_accept % n_sock + (proc % n_metric); };

        uint64_t sock_cursor = 0, doc_cursor = 0, last_sock = 0;
        // Round-robin interleaving across programs, one event per turn.
        bool any = true;
        while (any) {
            any = false;
            for (auto& prog : programs) {
                if (prog.budget == 0) continue;
                any = true;
                prog.budget--;
                ts += kTick;
                const std::string pid = fmt("p%llu", prog.proc);
                emit.declare(pid, "SUBJECT_PROCESS",
                             {{"name", proc_name(prog.tmpl, prog.proc)}}, ts);

                // Every process emits periodic telemetry; that token mass is
                // what separates processes from the files they resemble.
                if (prog.tick++ % 6 == 5) {
                    const uint64_t s = metric_sock(prog.proc);
                    declare_sock(s, true);
                    emit.event(pid, fmt("s%llu", s), ts, "EVENT_SENDTO");
                    continue;
                }

                switch (prog.tmpl) {
                case kWeb: {
                    if (prog.step == 0) {
                        const uint64_t f = cfg_file(prog.proc);
                        declare_file(f);
                        emit.event(pid, fmt("f%llu", f), ts, "EVENT_READ");
                    } else if (prog.step % 3 == 1) {
                        last_sock = s_lo + (sock_cursor++ % n_accept);
                        declare_sock(last_sock, false);
                        emit.event(pid, fmt("s%llu", last_sock), ts, "EVENT_ACCEPT");
                    } else if (prog.step % 3 == 2) {
                        emit.event(pid, fmt("s%llu", last_sock), ts, "EVENT_RECVMSG");
                    } else {
                        const uint64_t f = log_file(prog.proc);
                        declare_file(f);
                        emit.event(pid, fmt("f%llu", f), ts, "EVENT_SENDMSG");
                    }
                    break;
                }
                case kBackup: {
                    if (prog.step % 7 < 6) {
                        const uint64_t f = doc_file(doc_cursor++);
                        declare_file(f);
                        emit.event(pid, fmt("f%llu", f), ts, "EVENT_READ");
                        if (phase == 1 && first_phase1_file.empty())
                            first_phase1_file = fmt("f%llu", f);
                    } else {
                        const uint64_t f = arch_file(prog.proc);
                        declare_file(f);
                        emit.event(pid, fmt("f%llu", f), ts, "EVENT_WRITE");
                    }
                    break;
                }
                case kLogger: {
                    const uint64_t f = log_file(prog.proc + 7);
                    declare_file(f);
                    const char* ops[] = {"EVENT_OPEN", "EVENT_SENDMSG", "EVENT_SENDMSG", "EVENT_CLOSE"};
                    emit.event(pid, fmt("f%llu", f), ts, ops[prog.step % 4]);
                    break;
                }
                case kIndexer: {
                    if (prog.step % 3 == 0) prog.cursor = doc_file(doc_cursor++);
                    declare_file(prog.cursor);
                    const char* ops[] = {"EVENT_OPEN", "EVENT_READ", "EVENT_CLOSE"};
                    emit.event(pid, fmt("f%llu", prog.cursor), ts, ops[prog.step % 3]);
                    if (phase == 1 && first_phase1_file.empty())
                        first_phase1_file = fmt("f%llu", prog.cursor);
                    break;
                }
                default: {  // monitor: integrity scan walks every file slot
                    const uint64_t f = f_lo + prog.cursor++ % n_file;
                    declare_file(f);
                    emit.event(pid, fmt("f%llu", f), ts, "EVENT_STAT");
                    break;
                }
                }
                prog.step++;
            }
        }
    };

    const uint64_t phase0_events = cfg.benign_events / 2;
    run_phase(0, phase0_events);
    out.truth.boundary_ts = ts;
    const int64_t phase1_start = ts;
    run_phase(1, cfg.benign_events - phase0_events);
    const int64_t phase1_end = ts;

    if (cfg.attack_chains > 0) {
        std::vector<std::string> attack_lines;
        Emitter aemit(attack_lines);
        const int64_t span = std::max<int64_t>(phase1_end - phase1_start, kTick);

        for (uint32_t c = 0; c < cfg.attack_chains; ++c) {
            ChainInfo chain;
            chain.chain_id = c;
            int64_t at = phase1_start + span * (c + 1) / (cfg.attack_chains + 1) + kTick / 2;
            const int64_t stride = std::max<int64_t>(kTick, span / (8 * cfg.chain_length));

            // Stage cycle: each short-lived implant forks the next, keeps
            // the staged payload fresh, and beacons the current flow. The
            // attack I/O is spread thinly over many implants, so every
            // chain entity ends up with an event-type profile no benign
            // node of its own type ever shows.
            // One implant per chain stages payload files and exfiltration
            // flows over months. The staged objects carry event-type
            // profiles no benign node of their type ever shows (write-flood
            // files, beacon-flood flows), which is what the detector keys on.
            std::string cur_proc;
            for (uint32_t j = 0; j < cfg.chain_length; ++j) {
                if (j == 0) {
                    const std::string id = fmt("mp%llu", c * 1000ull + j);
                    aemit.declare(id, "SUBJECT_PROCESS",
                                  {{"name", proc_name(static_cast<int>(rng.below(kNumTemplates)),
                                                      rng.below(64))}},
                                  at);
                    if (!first_phase1_file.empty()) {
                        aemit.event(id, first_phase1_file, at, "EVENT_READ");
                        at += stride;
                    }
                    cur_proc = id;
                    chain.steps.push_back({id, "process"});
                } else if (j % 2 == 1) {  // staged payload, assembled in pieces
                    const std::string id = fmt("mf%llu", c * 1000ull + j);
                    aemit.declare(id, "FILE_OBJECT_FILE", {{"path", doc_path(rng.below(256))}}, at);
                    aemit.event(cur_proc, id, at, "EVENT_OPEN");
                    at += stride;
                    for (int k = 0; k < 10; ++k) {
                        aemit.event(cur_proc, id, at, "EVENT_WRITE");
                        at += stride / 3 + 1;
                    }
                    aemit.event(cur_proc, id, at, "EVENT_EXECUTE");
                    at += stride;
                    chain.steps.push_back({id, "file"});
                } else {  // exfiltration flow, slow beacons
                    const std::string id = fmt("ms%llu", c * 1000ull + j);
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "10.0.%llu.%llu:%llu",
                                  static_cast<unsigned long long>(rng.below(6)),
                                  static_cast<unsigned long long>(rng.below(8)),
                                  static_cast<unsigned long long>(8000 + rng.below(6)));
                    aemit.declare(id, "NET_FLOW_OBJECT", {{"addr", buf}}, at);
                    aemit.event(cur_proc, id, at, "EVENT_CONNECT");
                    at += stride;
                    for (int k = 0; k < 10; ++k) {  // months of beacons
                        aemit.event(cur_proc, id, at, "EVENT_SENDTO");
                        at += stride / 4 + 1;
                    }
                    chain.steps.push_back({id, "socket"});
                }
                out.truth.malicious.insert(chain.steps.back().entity_id);
            }
            out.truth.chains.push_back(std::move(chain));
        }

        // Merge the attack stream into the benign stream by timestamp; the
        // odd-tick offset keeps the two streams collision-free.
        std::vector<std::string> merged;
        merged.reserve(out.lines.size() + attack_lines.size());
        auto ts_of = [](const std::string& line) {
            const json j = json::parse(line);
            return j.at("ts").get<int64_t>();
        };
        size_t a = 0, b = 0;
        while (a < out.lines.size() || b < attack_lines.size()) {
            if (b >= attack_lines.size() ||
                (a < out.lines.size() && ts_of(out.lines[a]) <= ts_of(attack_lines[b])))
                merged.push_back(std::move(out.lines[a++]));
            else
                merged.push_back(std::move(attack_lines[b++]));
        }
        out.lines = std::move(merged);
    }

    return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split(
    const std::vector<std::string>& lines, int64_t boundary_ts) {
    int64_t min_ts = INT64_MAX, max_ts = INT64_MIN;
    std::vector<int64_t> ts_values;
    ts_values.reserve(lines.size());
    for (const auto& line : lines) {
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("ts"))
            throw Error(Errc::malformed_line, "split needs a ts field on every line");
        const int64_t t = j["ts"].get<int64_t>();
        ts_values.push_back(t);
        min_ts = std::min(min_ts, t);
        max_ts = std::max(max_ts, t);
    }
    if (lines.empty() || boundary_ts < min_ts || boundary_ts > max_ts)
        throw Error(Errc::boundary_out_of_range, "split boundary outside the emitted time range");

    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (ts_values[i] <= boundary_ts) out.first.push_back(lines[i]);
        else out.second.push_back(lines[i]);
    }
    return out;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    json j;
    j["malicious"] = std::vector<std::string>(gt.malicious.begin(), gt.malicious.end());
    j["boundary_ts"] = gt.boundary_ts;
    json chains = json::array();
    for (const auto& c : gt.chains) {
        json steps = json::array();
        for (const auto& s : c.steps) steps.push_back({{"entity_id", s.entity_id}, {"kind", s.kind}});
        chains.push_back({{"chain_id", c.chain_id}, {"steps", steps}});
    }
    j["chains"] = chains;
    io::save_json(path, j);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    const json j = io::load_json(path);
    GroundTruth gt;
    for (const auto& id : j.at("malicious")) gt.malicious.insert(id.get<std::string>());
    gt.boundary_ts = j.at("boundary_ts").get<int64_t>();
    for (const auto& c : j.at("chains")) {
        ChainInfo ci;
        ci.chain_id = c.at("chain_id").get<uint32_t>();
        for (const auto& s : c.at("steps"))
            ci.steps.push_back({s.at("entity_id").get<std::string>(), s.at("kind").get<std::string>()});
        gt.chains.push_back(std::move(ci));
    }
    return gt;
}

}  // namespace provdistill

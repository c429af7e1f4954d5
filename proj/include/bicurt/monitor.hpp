#pragma once

// Resumable surveillance state: one event at a time, with the state
// persisted between invocations as a versioned JSON document.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/inference.hpp"
#include "bicurt/json_io.hpp"
#include "bicurt/simulator.hpp"

namespace bicurt {

enum class MonitorStatus { open, rejected_x, rejected_y, rejected_corner, exhausted };

inline const char* to_string(MonitorStatus s) {
    switch (s) {
        case MonitorStatus::open: return "open";
        case MonitorStatus::rejected_x: return "rejected_x";
        case MonitorStatus::rejected_y: return "rejected_y";
        case MonitorStatus::rejected_corner: return "rejected_corner";
        case MonitorStatus::exhausted: return "exhausted";
    }
    return "unknown";
}

inline MonitorStatus monitor_status_from_string(const std::string& s) {
    for (auto v : {MonitorStatus::open, MonitorStatus::rejected_x, MonitorStatus::rejected_y,
                   MonitorStatus::rejected_corner, MonitorStatus::exhausted})
        if (s == to_string(v)) return v;
    throw DocumentError("unknown monitor status '" + s + "'");
}

inline MonitorStatus status_for(Boundary b) {
    switch (b) {
        case Boundary::x: return MonitorStatus::rejected_x;
        case Boundary::y: return MonitorStatus::rejected_y;
        case Boundary::corner: return MonitorStatus::rejected_corner;
        case Boundary::none: return MonitorStatus::exhausted;
    }
    return MonitorStatus::exhausted;
}

struct MonitorState {
    BivariateDesign design;
    LatticeCounts counts;
    std::int64_t last_seq = 0;
    MonitorStatus status = MonitorStatus::open;

    static MonitorState fresh(const BivariateDesign& d) {
        MonitorState s;
        s.design = d;
        return s;
    }

    friend bool operator==(const MonitorState&, const MonitorState&) = default;
};

struct DecisionRecord {
    std::int64_t seq = 0;
    std::int64_t sx = 0;
    std::int64_t sy = 0;
    int kx = 0;
    int ky = 0;
    int n_star = 0;
    MonitorStatus status = MonitorStatus::open;
    std::optional<PostTestEstimate> estimate;  // set once the test closes

    std::string action() const {
        if (status == MonitorStatus::open) return "continue";
        return status == MonitorStatus::exhausted ? "stop_not_reject" : "stop_reject";
    }
};

inline json to_json(const DecisionRecord& r) {
    json j = {{"seq", r.seq},       {"s_x", r.sx},         {"s_y", r.sy},
              {"k_x", r.kx},        {"k_y", r.ky},         {"n_star", r.n_star},
              {"status", to_string(r.status)}, {"action", r.action()}};
    if (r.estimate) j["estimate"] = to_json(*r.estimate);
    return j;
}

inline std::pair<MonitorState, DecisionRecord> monitor_step(const MonitorState& state, const Event& event) {
    if (state.status != MonitorStatus::open)
        throw StateError(std::string("monitor is closed (status ") + to_string(state.status) + "); event " +
                         std::to_string(event.seq) + " rejected");
    if (event.seq != state.last_seq + 1) {
        std::ostringstream os;
        os << "expected event seq " << state.last_seq + 1 << ", got " << event.seq;
        throw SequenceError(os.str());
    }
    validate_event(event);

    MonitorState next = state;
    next.counts.add(event.x, event.y);
    next.last_seq = event.seq;
    const bool over_x = next.counts.sx() > next.design.kx();
    const bool over_y = next.counts.sy() > next.design.ky();
    if (over_x && over_y) {
        next.status = MonitorStatus::rejected_corner;
    } else if (over_x) {
        next.status = MonitorStatus::rejected_x;
    } else if (over_y) {
        next.status = MonitorStatus::rejected_y;
    } else if (next.counts.total() >= next.design.n_star) {
        next.status = MonitorStatus::exhausted;
    }

    DecisionRecord rec;
    rec.seq = event.seq;
    rec.sx = next.counts.sx();
    rec.sy = next.counts.sy();
    rec.kx = next.design.kx();
    rec.ky = next.design.ky();
    rec.n_star = next.design.n_star;
    rec.status = next.status;
    if (next.status != MonitorStatus::open) rec.estimate = post_test_estimate(next.counts, next.counts.total());
    return {next, rec};
}

inline constexpr int kStateVersion = 1;

// Throws DocumentError if the state could not have been produced by
// monitor_step from a fresh state.
inline void validate_state(const MonitorState& s) {
    const auto& c = s.counts;
    const auto& d = s.design;
    if (c.n00 < 0 || c.n10 < 0 || c.n01 < 0 || c.n11 < 0) throw DocumentError("state counts must be nonnegative");
    if (c.total() != s.last_seq) throw DocumentError("state counts do not sum to last_seq");
    if (c.sx() > d.kx() + 1 || c.sy() > d.ky() + 1) throw DocumentError("state counts exceed k* + 1");
    if (c.total() > d.n_star) throw DocumentError("state has consumed more than n_star events");
    const bool over_x = c.sx() == d.kx() + 1;
    const bool over_y = c.sy() == d.ky() + 1;
    bool ok = false;
    switch (s.status) {
        case MonitorStatus::open: ok = !over_x && !over_y && c.total() < d.n_star; break;
        case MonitorStatus::rejected_x: ok = over_x && !over_y; break;
        case MonitorStatus::rejected_y: ok = over_y && !over_x; break;
        case MonitorStatus::rejected_corner: ok = over_x && over_y && c.n11 > 0; break;
        case MonitorStatus::exhausted: ok = !over_x && !over_y && c.total() == d.n_star; break;
    }
    if (!ok) throw DocumentError(std::string("state status ") + to_string(s.status) + " inconsistent with counts");
}

inline json state_save(const MonitorState& s) {
    std::ostringstream fp;
    fp << std::hex << design_fingerprint(s.design);
    return {{"version", kStateVersion}, {"design_fingerprint", fp.str()}, {"design", to_json(s.design)},
            {"counts", to_json(s.counts)}, {"last_seq", s.last_seq}, {"status", to_string(s.status)}};
}

// If `expected` is given, the document's design must match it.
inline MonitorState state_load(const json& doc, const std::optional<BivariateDesign>& expected = std::nullopt) {
    if (!doc.is_object()) throw DocumentError("state document must be a JSON object");
    const int version = detail::required<int>(doc, "version");
    if (version != kStateVersion)
        throw DocumentError("state version " + std::to_string(version) + " unsupported (expected " +
                            std::to_string(kStateVersion) + ")");
    MonitorState s;
    s.design = design_from_json(detail::required<json>(doc, "design"));
    std::ostringstream fp;
    fp << std::hex << design_fingerprint(s.design);
    if (detail::required<std::string>(doc, "design_fingerprint") != fp.str())
        throw DocumentError("state design fingerprint does not match its design");
    if (expected && design_fingerprint(*expected) != design_fingerprint(s.design))
        throw DocumentError("state was created under a different design");
    s.counts = counts_from_json(detail::required<json>(doc, "counts"));
    s.last_seq = detail::required<std::int64_t>(doc, "last_seq");
    s.status = monitor_status_from_string(detail::required<std::string>(doc, "status"));
    validate_state(s);
    return s;
}

}  // namespace bicurt

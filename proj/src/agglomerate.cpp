#include "cada/agglomerate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace cada {

Policy parse_policy(const std::string& s)
{
    if (s == "standard") {
        return Policy::Standard;
    }
    if (s == "delayed") {
        return Policy::Delayed;
    }
    throw ValueError("unknown policy '" + s + "' (expected standard or delayed)");
}

std::string to_string(Policy p)
{
    return p == Policy::Standard ? "standard" : "delayed";
}

namespace {

constexpr double kNoPrior = std::numeric_limits<double>::infinity();

// Min-heap entry. Stale entries stay in the heap; an entry is live only while
// its stamp equals the stamp recorded for the edge when it was last queued.
struct Entry {
    double key;
    EdgeId id;
    std::uint64_t stamp;
};

struct EntryAfter {
    bool operator()(const Entry& a, const Entry& b) const
    {
        if (a.key != b.key) {
            return a.key > b.key;
        }
        if (a.id != b.id) {
            return a.id > b.id;
        }
        return a.stamp > b.stamp;
    }
};

struct EdgeState {
    bool candidate = false;
    bool queued = false;
    std::uint64_t stamp = 0;
    double entry_key = 0.0;
    double h = 0.0;
    // Lazy mode: the queued entry is a lower bound and h is stale; the edge is
    // ACTIVE iff its recomputed confidence exceeds `baseline`.
    bool dirty = false;
    double baseline = 0.0;
};

class Engine {
public:
    Engine(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg, const AgglomHooks& hooks)
        : g_(g), h_(h), cfg_(cfg), hooks_(hooks)
    {
        if (!(cfg.delta >= 0.0 && cfg.delta <= 1.0)) {
            throw ValueError("delta must lie in [0,1], got " + std::to_string(cfg.delta));
        }
    }

    MergeTrace run_standard()
    {
        seed_queue();
        for (;;) {
            std::optional<Entry> top = peek_live();
            if (!top) {
                break;
            }
            heap_.pop();
            ++trace_.counters.pops;
            examine(*top);
            if (top->key > cfg_.delta) {
                break;
            }
            if (vetoed(*top)) {
                continue;
            }
            const Label keep = merge_edge(*top);
            for (const auto& [nb, eid] : g_.node(keep).adjacency) {
                EdgeState& s = state_[eid];
                s.candidate = is_candidate(g_.edge(eid));
                if (!s.candidate) {
                    s.queued = false;
                    continue;
                }
                s.h = evaluate(eid);
                push(eid, s.h);
            }
        }
        return std::move(trace_);
    }

    MergeTrace run_delayed()
    {
        seed_queue();
        for (;;) {
            std::optional<Entry> top = next_active();
            if (!top || top->key > cfg_.delta) {
                if (cfg_.lazy_updates) {
                    resolve_all_dirty();
                }
                if (reactivate() == 0) {
                    if (top) {
                        examine(*top);
                    }
                    break;
                }
                ++sweep_;
                continue;
            }
            heap_.pop();
            ++trace_.counters.pops;
            examine(*top);
            if (vetoed(*top)) {
                continue;
            }
            merge_delayed(*top);
        }
        return std::move(trace_);
    }

private:
    struct Prior {
        bool present = false;
        EdgeId id = 0;
        bool candidate = false;
        double h = 0.0;
        bool queued = false;
        double entry_key = 0.0;
    };

    bool is_candidate(const BoundaryEdge& e) const
    {
        return !hooks_.candidate || hooks_.candidate(g_, e);
    }

    double evaluate(EdgeId id)
    {
        const double v = h_(g_, g_.edge(id));
        ++trace_.counters.recomputations;
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValueError("confidence function returned " + std::to_string(v) + " for edge " +
                             std::to_string(id) + "; expected a finite value in [0,1]");
        }
        g_.set_confidence(id, v);
        return v;
    }

    void push(EdgeId id, double key)
    {
        EdgeState& s = state_[id];
        s.stamp = ++stamp_clock_;
        s.queued = true;
        s.entry_key = key;
        heap_.push({key, id, s.stamp});
        ++trace_.counters.pushes;
    }

    bool live(const Entry& e) const
    {
        if (!g_.has_edge(e.id)) {
            return false;
        }
        const auto it = state_.find(e.id);
        return it != state_.end() && it->second.queued && it->second.stamp == e.stamp;
    }

    void seed_queue()
    {
        for (EdgeId id : g_.edge_ids()) {
            EdgeState& s = state_[id];
            s.candidate = is_candidate(g_.edge(id));
            if (!s.candidate) {
                continue;
            }
            s.h = evaluate(id);
            g_.set_flag(id, EdgeFlag::Active);
            push(id, s.h);
        }
    }

    std::optional<Entry> peek_live()
    {
        while (!heap_.empty()) {
            const Entry top = heap_.top();
            if (live(top)) {
                return top;
            }
            heap_.pop();
            ++trace_.counters.stale_pops;
        }
        return std::nullopt;
    }

    // Top live ACTIVE entry whose key equals the edge's current confidence.
    // Dirty entries met on the way are resolved (lazy mode).
    std::optional<Entry> next_active()
    {
        for (;;) {
            std::optional<Entry> top = peek_live();
            if (!top) {
                return std::nullopt;
            }
            if (!state_[top->id].dirty) {
                return top;
            }
            heap_.pop();
            ++trace_.counters.pops;
            resolve(top->id);
        }
    }

    void resolve(EdgeId id)
    {
        EdgeState& s = state_[id];
        s.dirty = false;
        s.h = evaluate(id);
        if (s.h > s.baseline) {
            g_.set_flag(id, EdgeFlag::Active);
            push(id, s.h);
        } else {
            defer(id);
        }
    }

    void defer(EdgeId id)
    {
        EdgeState& s = state_[id];
        s.queued = false;
        s.dirty = false;
        g_.set_flag(id, EdgeFlag::Delay);
        delayed_.insert(id);
    }

    void resolve_all_dirty()
    {
        std::vector<EdgeId> dirty;
        for (const auto& [id, s] : state_) {
            if (s.dirty && s.queued && g_.has_edge(id)) {
                dirty.push_back(id);
            }
        }
        std::sort(dirty.begin(), dirty.end());
        for (EdgeId id : dirty) {
            resolve(id);
        }
    }

    std::size_t reactivate()
    {
        std::size_t n = 0;
        for (auto it = delayed_.begin(); it != delayed_.end();) {
            const EdgeId id = *it;
            const EdgeState& s = state_[id];
            if (g_.has_edge(id) && s.candidate && s.h <= cfg_.delta) {
                g_.set_flag(id, EdgeFlag::Active);
                push(id, s.h);
                it = delayed_.erase(it);
                ++n;
            } else {
                ++it;
            }
        }
        trace_.counters.reactivations += n;
        return n;
    }

    bool vetoed(const Entry& e)
    {
        if (!hooks_.veto || !hooks_.veto(g_, g_.edge(e.id))) {
            return false;
        }
        state_[e.id].queued = false;
        return true;
    }

    void examine(const Entry& e)
    {
        if (hooks_.on_examine) {
            hooks_.on_examine(g_, g_.edge(e.id), e.key);
        }
    }

    // Merges the endpoints of the entry's edge, records the step, and returns
    // the surviving region id.
    Label merge_edge(const Entry& e)
    {
        const BoundaryEdge& edge = g_.edge(e.id);
        const Label keep = edge.lo;
        const Label absorb = edge.hi;
        g_.merge(keep, absorb);
        state_.erase(e.id);
        delayed_.erase(e.id);
        trace_.steps.push_back({trace_.steps.size(), keep, absorb, e.key, sweep_});
        if (hooks_.on_merge) {
            hooks_.on_merge(keep, absorb);
        }
        return keep;
    }

    Prior capture_prior(EdgeId id)
    {
        Prior p;
        p.present = true;
        p.id = id;
        EdgeState& s = state_[id];
        p.candidate = s.candidate;
        if (!s.candidate) {
            return p;
        }
        if (s.dirty && s.queued) {
            // The comparison needs the confidence as it stands right now.
            s.dirty = false;
            s.h = evaluate(id);
            if (!(s.h > s.baseline)) {
                defer(id);
            }
        }
        p.h = s.h;
        p.queued = s.queued;
        p.entry_key = s.entry_key;
        return p;
    }

    void merge_delayed(const Entry& e)
    {
        const BoundaryEdge& edge = g_.edge(e.id);
        const Label keep = edge.lo;
        const Label absorb = edge.hi;

        std::map<Label, std::pair<Prior, Prior>> priors;
        for (const auto& [nb, eid] : g_.node(keep).adjacency) {
            if (nb != absorb) {
                priors[nb].first = capture_prior(eid);
            }
        }
        for (const auto& [nb, eid] : g_.node(absorb).adjacency) {
            if (nb != keep) {
                priors[nb].second = capture_prior(eid);
            }
        }

        merge_edge(e);

        for (auto& [nb, pair] : priors) {
            auto& [via_keep, via_absorb] = pair;
            const BoundaryEdge* survivor = g_.find_edge(keep, nb);
            const EdgeId sid = survivor->id;
            for (const Prior* p : {&via_keep, &via_absorb}) {
                if (p->present && p->id != sid) {
                    state_.erase(p->id);
                    delayed_.erase(p->id);
                }
            }

            EdgeState& s = state_[sid];
            s.candidate = is_candidate(*survivor);
            if (!s.candidate) {
                s.queued = false;
                s.dirty = false;
                delayed_.erase(sid);
                continue;
            }

            double baseline = kNoPrior;
            for (const Prior* p : {&via_keep, &via_absorb}) {
                if (p->present && p->candidate) {
                    baseline = std::min(baseline, p->h);
                }
            }

            if (cfg_.lazy_updates) {
                const Prior& own = (via_keep.present && via_keep.id == sid) ? via_keep : via_absorb;
                if (own.present && own.candidate && own.queued && own.entry_key <= baseline) {
                    // Keep the queued entry as a lower bound; decide on pop.
                    s.dirty = true;
                    s.baseline = baseline;
                    continue;
                }
            }

            s.queued = false;
            s.dirty = false;
            delayed_.erase(sid);
            s.h = evaluate(sid);
            if (s.h > baseline) {
                g_.set_flag(sid, EdgeFlag::Active);
                push(sid, s.h);
            } else {
                defer(sid);
            }
        }
    }

    RegionGraph& g_;
    const ConfidenceFn& h_;
    AgglomConfig cfg_;
    const AgglomHooks& hooks_;
    std::priority_queue<Entry, std::vector<Entry>, EntryAfter> heap_;
    std::unordered_map<EdgeId, EdgeState> state_;
    std::set<EdgeId> delayed_;
    std::uint64_t stamp_clock_ = 0;
    std::size_t sweep_ = 1;
    MergeTrace trace_;
};

} // namespace

MergeTrace agglomerate_standard(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg,
                                const AgglomHooks& hooks)
{
    return Engine(g, h, cfg, hooks).run_standard();
}

MergeTrace agglomerate_delayed(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg,
                               const AgglomHooks& hooks)
{
    return Engine(g, h, cfg, hooks).run_delayed();
}

MergeTrace agglomerate(RegionGraph& g, const ConfidenceFn& h, const AgglomConfig& cfg, const AgglomHooks& hooks)
{
    return cfg.policy == Policy::Standard ? agglomerate_standard(g, h, cfg, hooks)
                                          : agglomerate_delayed(g, h, cfg, hooks);
}

LabelVolume relabel(const LabelVolume& labels, const std::vector<const MergeTrace*>& traces)
{
    MergeForest forest;
    for (const MergeTrace* t : traces) {
        for (const MergeStep& s : t->steps) {
            forest.record(s.kept, s.absorbed);
        }
    }
    return forest.relabel(labels);
}

void write_trace_csv(std::ostream& out, const MergeTrace& trace)
{
    out << "step,kept,absorbed,confidence,sweep\n";
    char buf[64];
    for (const MergeStep& s : trace.steps) {
        std::snprintf(buf, sizeof buf, "%.17g", s.confidence);
        out << s.step << ',' << s.kept << ',' << s.absorbed << ',' << buf << ',' << s.sweep << '\n';
    }
}

std::string counters_json(const MergeTrace& trace, int indent)
{
    const MergeCounters& c = trace.counters;
    nlohmann::json doc = {
        {"merges", trace.steps.size()},
        {"pushes", c.pushes},
        {"pops", c.pops},
        {"stale_pops", c.stale_pops},
        {"recomputations", c.recomputations},
        {"reactivations", c.reactivations},
        {"sweeps", trace.steps.empty() ? 0 : trace.steps.back().sweep},
    };
    return doc.dump(indent);
}

} // namespace cada

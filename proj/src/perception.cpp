#include "flowsim/perception.hpp"

#include <cmath>

#include "flowsim/errors.hpp"

namespace flowsim {

int PerceptionSystem::register_listener(int id, Vec2 position, double heading,
                                        std::vector<SightConfig> senses) {
    if (listeners_.count(id)) throw ValidationError("duplicate listener id");
    for (const SightConfig &s : senses) {
        if (s.radius <= 0.0) throw ValidationError("sense radius must be > 0");
        if (s.fov_half_angle <= 0.0 || s.fov_half_angle > 180.0)
            throw ValidationError("fov half angle must be in (0, 180]");
    }
    listeners_[id] = ListenerState{position, heading, std::move(senses), {}};
    return id;
}

void PerceptionSystem::set_pose(int id, Vec2 position, double heading) {
    auto it = listeners_.find(id);
    if (it == listeners_.end()) throw ValidationError("unknown listener id");
    it->second.position = position;
    it->second.heading = heading;
}

static bool sight_blocked(const Vec2 &from, const Vec2 &to, std::span<const Segment> occluders) {
    Segment line{from, to};
    for (const Segment &o : occluders)
        if (segments_intersect(line, o)) return true;
    return false;
}

namespace {

bool sense_hits(const Vec2 &pos, double heading, const SightConfig &sense, const Stimulus &st,
                std::span<const Segment> occluders) {
    double d = distance(pos, st.position);
    if (d > sense.radius) return false;
    if (d > 0.0) {
        double bearing = std::atan2(st.position.y - pos.y, st.position.x - pos.x);
        double off = rad2deg(std::fabs(wrap_angle(bearing - heading)));
        if (off > sense.fov_half_angle) return false;
    }
    if (sense.requires_line_of_sight && sight_blocked(pos, st.position, occluders)) return false;
    return true;
}

}  // namespace

std::vector<PerceptionEvent> PerceptionSystem::tick(const std::vector<Stimulus> &stimuli,
                                                    std::span<const Segment> occluders,
                                                    long tick_index) {
    std::vector<PerceptionEvent> events;
    for (auto &[lid, state] : listeners_) {
        std::set<int> now;
        for (const Stimulus &st : stimuli) {
            if (st.source_id == lid) continue;
            for (const SightConfig &sense : state.senses) {
                if (sense_hits(state.position, state.heading, sense, st, occluders)) {
                    now.insert(st.source_id);
                    break;
                }
            }
        }
        // Walk both sorted sets in lockstep so events come out ordered by
        // source id within the listener.
        auto ni = now.begin();
        auto pi = state.perceived.begin();
        while (ni != now.end() || pi != state.perceived.end()) {
            if (pi == state.perceived.end() || (ni != now.end() && *ni < *pi)) {
                events.push_back({lid, *ni, PerceptionChange::Gained, tick_index});
                ++ni;
            } else if (ni == now.end() || *pi < *ni) {
                events.push_back({lid, *pi, PerceptionChange::Lost, tick_index});
                ++pi;
            } else {
                ++ni;
                ++pi;
            }
        }
        state.perceived = std::move(now);
    }
    return events;
}

std::vector<int> PerceptionSystem::perceived_set(int listener_id) const {
    auto it = listeners_.find(listener_id);
    if (it == listeners_.end()) throw ValidationError("unknown listener id");
    return {it->second.perceived.begin(), it->second.perceived.end()};
}

}  // namespace flowsim

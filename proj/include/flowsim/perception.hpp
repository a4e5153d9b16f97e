#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "flowsim/geometry.hpp"

namespace flowsim {

struct SightConfig {
    double radius = 0.0;              // meters, > 0
    double fov_half_angle = 180.0;    // degrees, (0, 180]
    bool requires_line_of_sight = false;
};

enum class StimulusKind { Vehicle, Obstacle, TrafficLight };

struct Stimulus {
    int source_id = -1;
    Vec2 position;
    StimulusKind kind = StimulusKind::Obstacle;
};

enum class PerceptionChange { Gained, Lost };

struct PerceptionEvent {
    int listener_id = -1;
    int source_id = -1;
    PerceptionChange change = PerceptionChange::Gained;
    long tick = 0;
};

/// Listener/stimulus perception: registered listeners test every stimulus
/// against range, field of view and (optionally) line of sight each tick.
/// Events are emitted only on Gained/Lost transitions, sorted by
/// (listener_id, source_id). A listener never perceives a stimulus with its
/// own id.
class PerceptionSystem {
  public:
    // Throws ValidationError on duplicate id or invalid sense parameters.
    int register_listener(int id, Vec2 position, double heading,
                          std::vector<SightConfig> senses);

    // Throws ValidationError for an unknown listener.
    void set_pose(int id, Vec2 position, double heading);

    std::vector<PerceptionEvent> tick(const std::vector<Stimulus> &stimuli,
                                      std::span<const Segment> occluders, long tick_index);

    // Current perception state (sorted source ids). Consistent with the fold
    // of all emitted events. Throws ValidationError for an unknown listener.
    std::vector<int> perceived_set(int listener_id) const;

    bool has_listener(int id) const { return listeners_.count(id) > 0; }

  private:
    struct ListenerState {
        Vec2 position;
        double heading = 0.0;
        std::vector<SightConfig> senses;
        std::set<int> perceived;
    };
    std::map<int, ListenerState> listeners_;
};

}  // namespace flowsim

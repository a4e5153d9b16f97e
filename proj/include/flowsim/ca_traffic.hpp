#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace flowsim {

struct MacroSample {
    double density = 0.0;     // vehicles/cell at window end
    double flow = 0.0;        // detector crossings per step
    double mean_speed = 0.0;  // cells/step, averaged over vehicles and steps; 0 if empty
};

/// Single-lane cellular automaton with the standard four-rule update
/// (accelerate, brake to gap, randomize, move). Synchronous update; at most
/// one vehicle per cell. The detector sits on the boundary after the last
/// cell: ring wrap-arounds and open-lane exits both count as crossings.
class CellLattice {
  public:
    CellLattice(int length, bool closed, int v_max, double p_slow, std::uint64_t seed,
                double cell_length = 7.5);

    // Ring initialized with round(density*length) vehicles, equally spaced, v=0.
    static CellLattice ring_with_density(int length, double density, int v_max, double p_slow,
                                         std::uint64_t seed, double cell_length = 7.5);

    // Throws ValidationError when the cell is occupied or out of range.
    void add_vehicle(int cell, int speed);

    // One synchronous update step.
    void step();

    // Open-boundary feeding: with probability entry_rate a v=0 vehicle
    // appears in cell 0 if empty. Throws ValidationError on a closed lattice.
    void inject(double entry_rate);

    // Advances the lattice `window` steps while measuring.
    MacroSample measure(int window);

    int length() const { return length_; }
    bool closed() const { return closed_; }
    int v_max() const { return v_max_; }
    double p_slow() const { return p_slow_; }
    double cell_length() const { return cell_length_; }
    int vehicle_count() const;
    long detector_crossings() const { return crossings_; }

    // (cell, speed) pairs in ascending cell order.
    std::vector<std::pair<int, int>> vehicles() const;
    // (cell, id) pairs in ascending cell order.
    std::vector<std::pair<int, long>> vehicle_ids() const;

  private:
    double uniform01();

    int length_;
    bool closed_;
    int v_max_;
    double p_slow_;
    double cell_length_;
    std::mt19937_64 rng_;
    std::vector<int> speed_;  // -1 = empty
    std::vector<long> id_;
    long next_id_ = 0;
    long crossings_ = 0;
};

}  // namespace flowsim

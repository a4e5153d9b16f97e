#include "flowsim/ca_traffic.hpp"

#include <algorithm>
#include <cmath>

#include "flowsim/errors.hpp"

namespace flowsim {

CellLattice::CellLattice(int length, bool closed, int v_max, double p_slow, std::uint64_t seed,
                         double cell_length)
    : length_(length), closed_(closed), v_max_(v_max), p_slow_(p_slow),
      cell_length_(cell_length), rng_(seed), speed_(length, -1), id_(length, -1) {
    if (length < 1) throw ValidationError("lattice length must be >= 1");
    if (v_max < 0) throw ValidationError("v_max must be >= 0");
    if (closed && v_max >= length)
        throw ValidationError("ring lattice must be longer than v_max");
    if (p_slow < 0.0 || p_slow > 1.0) throw ValidationError("p_slow must be in [0,1]");
    if (cell_length <= 0.0) throw ValidationError("cell_length must be > 0");
}

CellLattice CellLattice::ring_with_density(int length, double density, int v_max, double p_slow,
                                           std::uint64_t seed, double cell_length) {
    if (density < 0.0 || density > 1.0) throw ValidationError("density must be in [0,1]");
    CellLattice lat(length, true, v_max, p_slow, seed, cell_length);
    int count = static_cast<int>(std::lround(density * length));
    for (int i = 0; i < count; ++i) {
        int cell = static_cast<int>(static_cast<long>(i) * length / count);
        lat.add_vehicle(cell, 0);
    }
    return lat;
}

void CellLattice::add_vehicle(int cell, int speed) {
    if (cell < 0 || cell >= length_) throw ValidationError("vehicle cell out of range");
    if (speed_[cell] >= 0) throw ValidationError("cell already occupied");
    if (speed < 0 || speed > v_max_) throw ValidationError("vehicle speed out of [0, v_max]");
    speed_[cell] = speed;
    id_[cell] = next_id_++;
}

double CellLattice::uniform01() {
    // 53-bit mantissa draw; identical across platforms for a given seed.
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void CellLattice::step() {
    std::vector<int> occupied;
    occupied.reserve(length_);
    for (int c = 0; c < length_; ++c)
        if (speed_[c] >= 0) occupied.push_back(c);

    // Rules 1-3 per vehicle in ascending cell order (randomization draw order).
    std::vector<int> new_speed(occupied.size());
    for (size_t i = 0; i < occupied.size(); ++i) {
        int c = occupied[i];
        int v = std::min(speed_[c] + 1, v_max_);
        int gap;
        if (occupied.size() == 1) {
            gap = closed_ ? length_ - 1 : length_;  // no vehicle ahead
        } else if (i + 1 < occupied.size()) {
            gap = occupied[i + 1] - c - 1;
        } else {
            gap = closed_ ? (occupied.front() + length_) - c - 1 : length_;
        }
        v = std::min(v, gap);
        if (p_slow_ > 0.0 && v > 0 && uniform01() < p_slow_) v -= 1;
        new_speed[i] = v;
    }

    // Rule 4: synchronous move.
    std::vector<int> speed(length_, -1);
    std::vector<long> id(length_, -1);
    for (size_t i = 0; i < occupied.size(); ++i) {
        int c = occupied[i];
        int v = new_speed[i];
        int dest = c + v;
        if (dest >= length_) {
            ++crossings_;
            if (!closed_) continue;  // open lane: vehicle leaves
            dest -= length_;
        }
        speed[dest] = v;
        id[dest] = id_[c];
    }
    speed_ = std::move(speed);
    id_ = std::move(id);
}

void CellLattice::inject(double entry_rate) {
    if (closed_) throw ValidationError("cannot inject into a closed lattice");
    if (entry_rate < 0.0 || entry_rate > 1.0)
        throw ValidationError("entry_rate must be in [0,1]");
    if (entry_rate == 0.0) return;
    if (entry_rate < 1.0 && uniform01() >= entry_rate) return;
    if (speed_[0] < 0) add_vehicle(0, 0);
}

MacroSample CellLattice::measure(int window) {
    if (window < 1) throw ValidationError("measurement window must be >= 1");
    long start_crossings = crossings_;
    long speed_sum = 0;
    long vehicle_steps = 0;
    for (int i = 0; i < window; ++i) {
        step();
        for (int c = 0; c < length_; ++c) {
            if (speed_[c] >= 0) {
                speed_sum += speed_[c];
                ++vehicle_steps;
            }
        }
    }
    MacroSample m;
    m.density = static_cast<double>(vehicle_count()) / length_;
    m.flow = static_cast<double>(crossings_ - start_crossings) / window;
    m.mean_speed = vehicle_steps > 0 ? static_cast<double>(speed_sum) / vehicle_steps : 0.0;
    return m;
}

int CellLattice::vehicle_count() const {
    return static_cast<int>(std::count_if(speed_.begin(), speed_.end(),
                                          [](int v) { return v >= 0; }));
}

std::vector<std::pair<int, int>> CellLattice::vehicles() const {
    std::vector<std::pair<int, int>> out;
    for (int c = 0; c < length_; ++c)
        if (speed_[c] >= 0) out.emplace_back(c, speed_[c]);
    return out;
}

std::vector<std::pair<int, long>> CellLattice::vehicle_ids() const {
    std::vector<std::pair<int, long>> out;
    for (int c = 0; c < length_; ++c)
        if (speed_[c] >= 0) out.emplace_back(c, id_[c]);
    return out;
}

}  // namespace flowsim

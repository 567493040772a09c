#include "gridsync/power_system.hpp"

#include <algorithm>

#include "gridsync/errors.hpp"

namespace gridsync {

PowerSystem::PowerSystem(std::vector<Bus> buses, std::vector<Branch> branches,
                         std::vector<AttachedDevice> devices)
    : buses_(std::move(buses)), branches_(std::move(branches)), devices_(std::move(devices)) {
    const int nb = static_cast<int>(buses_.size());
    if (nb < 1) throw StructuralError("system needs at least one bus");
    std::vector<bool> seen(nb, false);
    for (const Bus& b : buses_) {
        if (b.id < 1 || b.id > nb) throw StructuralError("bus ids must be contiguous 1..n_bus");
        if (seen[b.id - 1]) throw StructuralError("duplicate bus id " + std::to_string(b.id));
        seen[b.id - 1] = true;
    }
    std::sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    ybus_ = build_admittance(branches_, nb);

    std::sort(devices_.begin(), devices_.end(),
              [](const AttachedDevice& a, const AttachedDevice& b) { return a.bus < b.bus; });
    device_of_bus_.assign(nb, -1);
    int x_off = 0;
    for (int k = 0; k < static_cast<int>(devices_.size()); ++k) {
        const AttachedDevice& ad = devices_[k];
        if (ad.bus < 1 || ad.bus > nb)
            throw StructuralError("device attached to unknown bus " + std::to_string(ad.bus));
        if (device_of_bus_[ad.bus - 1] != -1)
            throw StructuralError("bus " + std::to_string(ad.bus) + " has two devices");
        validate(ad.model);
        device_of_bus_[ad.bus - 1] = k;

        Block blk;
        blk.bus = ad.bus;
        blk.device_index = k;
        blk.n1 = x1_dim(ad.model);
        blk.n2 = x2_dim(ad.model);
        blk.x1_off = n1_;
        blk.x2_off = n2_;
        blk.x_off = x_off;
        blocks_.push_back(blk);

        const auto names = device_state_names(ad.model);
        const std::string prefix = device_kind_name(ad.model) + "." + std::to_string(ad.bus) + ".";
        for (int i = 0; i < blk.n1; ++i) {
            x1_index_.push_back(x_off + i);
            state_names_.push_back(prefix + names[i]);
        }
        for (int i = 0; i < blk.n2; ++i) {
            x2_index_.push_back(x_off + blk.n1 + i);
            state_names_.push_back(prefix + names[blk.n1 + i]);
        }
        n1_ += blk.n1;
        n2_ += blk.n2;
        x_off += blk.n1 + blk.n2;
    }
}

const DeviceModel* PowerSystem::device_at(int bus_id) const {
    if (bus_id < 1 || bus_id > n_bus()) return nullptr;
    const int k = device_of_bus_[bus_id - 1];
    return k < 0 ? nullptr : &devices_[k].model;
}

const PowerSystem::Block* PowerSystem::block_at(int bus_id) const {
    if (bus_id < 1 || bus_id > n_bus()) return nullptr;
    const int k = device_of_bus_[bus_id - 1];
    return k < 0 ? nullptr : &blocks_[k];
}

Vec PowerSystem::full_x(const SystemState& s) const {
    Vec x(n());
    for (const Block& b : blocks_) {
        x.segment(b.x_off, b.n1) = s.x1.segment(b.x1_off, b.n1);
        x.segment(b.x_off + b.n1, b.n2) = s.x2.segment(b.x2_off, b.n2);
    }
    return x;
}

void PowerSystem::split_x(const Vec& x_full, Vec& x1, Vec& x2) const {
    x1.resize(n1_);
    x2.resize(n2_);
    for (const Block& b : blocks_) {
        x1.segment(b.x1_off, b.n1) = x_full.segment(b.x_off, b.n1);
        x2.segment(b.x2_off, b.n2) = x_full.segment(b.x_off + b.n1, b.n2);
    }
}

int PowerSystem::state_index(const std::string& suffix) const {
    int found = -1;
    for (int i = 0; i < static_cast<int>(state_names_.size()); ++i) {
        const std::string& nm = state_names_[i];
        if (nm.size() >= suffix.size() &&
            nm.compare(nm.size() - suffix.size(), suffix.size(), suffix) == 0) {
            // match whole dot-separated components only
            if (nm.size() > suffix.size() && nm[nm.size() - suffix.size() - 1] != '.') continue;
            if (found != -1)
                throw StructuralError("state name '" + suffix + "' is ambiguous");
            found = i;
        }
    }
    if (found == -1) throw StructuralError("no state named '" + suffix + "'");
    return found;
}

SystemState PowerSystem::flat_start() const {
    SystemState s;
    s.x1 = Vec::Zero(n1_);
    s.x2 = Vec::Zero(n2_);
    s.z = Vec::Zero(m());
    for (int i = 0; i < n_bus(); ++i) s.z(2 * i + 1) = 1.0;
    for (const Block& b : blocks_) {
        const DeviceModel& dev = devices_[b.device_index].model;
        if (const auto* fd = std::get_if<FluxDecaySg>(&dev)) {
            s.x2(b.x2_off + 1) = fd->E_f > 0 ? 1.0 : 0.0;  // Eq_prime near nominal
        } else if (const auto* inv = std::get_if<InverterPq>(&dev)) {
            s.x2(b.x2_off + 0) = inv->P_ref;
            s.x2(b.x2_off + 1) = inv->Q_ref;
        }
    }
    return s;
}

}  // namespace gridsync

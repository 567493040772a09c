#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gridsync/devices.hpp"
#include "gridsync/network.hpp"

namespace gridsync {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// The split dynamic state plus the algebraic vector.
/// x1 and x2 hold the device states gathered in bus order; z is laid out
/// interleaved per bus as (theta_1, V_1, ..., theta_n, V_n).
struct SystemState {
    Vec x1;
    Vec x2;
    Vec z;
};

/// A device attached to a bus (bus ids are 1-based).
struct AttachedDevice {
    int bus = 0;
    DeviceModel model;
};

/// Immutable structure-preserving network model: buses, branches, admittance,
/// and the per-bus devices. All evaluation routines treat it as read-only, so
/// one instance may be shared across concurrent analyses.
class PowerSystem {
  public:
    PowerSystem(std::vector<Bus> buses, std::vector<Branch> branches,
                std::vector<AttachedDevice> devices);

    int n_bus() const { return static_cast<int>(buses_.size()); }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int n() const { return n1_ + n2_; }
    int m() const { return 2 * n_bus(); }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const AdmittanceMatrix& admittance() const { return ybus_; }
    const std::vector<AttachedDevice>& devices() const { return devices_; }

    /// Per-device state offsets into the split vectors and into the full
    /// device-ordered state vector (x1 entries first within each device).
    struct Block {
        int bus = 0;          // 1-based bus id
        int device_index = 0; // into devices()
        int n1 = 0, n2 = 0;
        int x1_off = 0;  // offset into SystemState::x1
        int x2_off = 0;  // offset into SystemState::x2
        int x_off = 0;   // offset into the full state vector
    };
    const std::vector<Block>& blocks() const { return blocks_; }

    /// Device attached to bus id (nullptr when none).
    const DeviceModel* device_at(int bus_id) const;
    const Block* block_at(int bus_id) const;

    /// Full state vector in device order, (x1_i..., x2_i...) per device.
    Vec full_x(const SystemState& s) const;
    void split_x(const Vec& x_full, Vec& x1, Vec& x2) const;

    /// Indices of x1 / x2 entries inside the full state vector.
    const std::vector<int>& x1_index() const { return x1_index_; }
    const std::vector<int>& x2_index() const { return x2_index_; }

    /// Names, device order: "<kind>.<bus>.<state>".
    const std::vector<std::string>& state_names() const { return state_names_; }

    /// Index into the full state vector of the unique state whose name ends
    /// with `suffix` ("zeta", "1.zeta", ...). Throws StructuralError when
    /// absent or ambiguous.
    int state_index(const std::string& suffix) const;

    /// Flat-start state: theta = 0, V = 1, device states at reference values.
    SystemState flat_start() const;

  private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    AdmittanceMatrix ybus_;
    std::vector<AttachedDevice> devices_;
    std::vector<Block> blocks_;
    std::vector<int> device_of_bus_;  // -1 when none
    std::vector<int> x1_index_, x2_index_;
    std::vector<std::string> state_names_;
    int n1_ = 0, n2_ = 0;
};

}  // namespace gridsync

#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace cimsim {

enum class EnergyCategory {
  DpDrive,
  DplPrecharge,
  ChargeShare,
  SaDecision,
  LadderDc,
  RegisterUpdate,
  LmemAccess,
  Leakage,
};

inline constexpr int kEnergyCategories = 8;

const char* to_string(EnergyCategory c);

/// Per-event energies. Absolute values are placeholders chosen to reproduce
/// breakdown shapes, not silicon numbers.
struct EnergyParams {
  double charge_share = 0.5e-15;      // J per switch event
  double sa_decision = 10e-15;        // J per comparator decision
  double ladder_current = 1e-3;       // A
  double ladder_settle = 5e-9;        // s per conversion
  double register_bit = 1e-15;        // J per flip-flop update
  double shift_sub_block = 20e-15;    // J per enabled 4-channel shift sub-block
  double lmem_access = 6e-12;         // J per 128b access, scaled by bits moved
  double leakage_per_cycle = 0.2e-12; // J per idle macro cycle
  double dram_per_bit = 15e-15;       // J per off-chip bit charged to the accelerator, see README
};

class EnergyLedger {
 public:
  void add(EnergyCategory c, double joules, std::uint64_t events = 1) {
    energy_[static_cast<int>(c)] += joules;
    events_[static_cast<int>(c)] += events;
  }
  double get(EnergyCategory c) const { return energy_[static_cast<int>(c)]; }
  std::uint64_t events(EnergyCategory c) const { return events_[static_cast<int>(c)]; }
  double total() const;
  void merge(const EnergyLedger& o);

 private:
  std::array<double, kEnergyCategories> energy_{};
  std::array<std::uint64_t, kEnergyCategories> events_{};
};

}  // namespace cimsim

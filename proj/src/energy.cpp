#include "cimsim/energy.hpp"

namespace cimsim {

const char* to_string(EnergyCategory c) {
  switch (c) {
    case EnergyCategory::DpDrive: return "dp_drive";
    case EnergyCategory::DplPrecharge: return "dpl_precharge";
    case EnergyCategory::ChargeShare: return "charge_share";
    case EnergyCategory::SaDecision: return "sa_decision";
    case EnergyCategory::LadderDc: return "ladder_dc";
    case EnergyCategory::RegisterUpdate: return "register_update";
    case EnergyCategory::LmemAccess: return "lmem_access";
    case EnergyCategory::Leakage: return "leakage";
  }
  return "?";
}

double EnergyLedger::total() const {
  double t = 0.0;
  for (double e : energy_) t += e;
  return t;
}

void EnergyLedger::merge(const EnergyLedger& o) {
  for (int i = 0; i < kEnergyCategories; ++i) {
    energy_[i] += o.energy_[i];
    events_[i] += o.events_[i];
  }
}

}  // namespace cimsim

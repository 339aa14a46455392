#include "cimsim/charge_core.hpp"

#include <cmath>

#include "cimsim/errors.hpp"

namespace cimsim {
namespace {

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double share(std::span<CapNode> nodes) {
  if (nodes.size() < 2) throw UsageError("share() needs at least two nodes");
  bool uniform = true;
  for (const auto& n : nodes) {
    if (!(n.capacitance > 0.0)) throw UsageError("share(): capacitance must be > 0");
    if (n.voltage != nodes.front().voltage) uniform = false;
  }
  if (uniform) return nodes.front().voltage;

  KahanSum q, c;
  for (const auto& n : nodes) {
    q.add(n.capacitance * n.voltage);
    c.add(n.capacitance);
  }
  const double v = q.sum / c.sum;
  for (auto& n : nodes) n.voltage = v;
  return v;
}

void precharge(CapNode& node, double level, double vddh) {
  if (!(level >= 0.0 && level <= vddh))
    throw UsageError("precharge(): level outside [0, V_DDH]");
  node.voltage = level;
}

double total_charge(std::span<const CapNode> nodes) {
  KahanSum q;
  for (const auto& n : nodes) q.add(n.capacitance * n.voltage);
  return q.sum;
}

double ktc_sigma(double capacitance, double temperature_k) {
  return std::sqrt(kBoltzmann * temperature_k / capacitance);
}

double noise_sigma(const NoiseSource& src, const CapNode& node) {
  switch (src.kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::ThermalKTC: return ktc_sigma(node.capacitance, src.sigma_or_temp);
    case NoiseKind::GaussianFixed: return src.sigma_or_temp;
  }
  return 0.0;
}

double sample_noise(const NoiseSource& src, const CapNode& node, RngStream& rng) {
  if (src.kind == NoiseKind::None) return 0.0;
  return rng.gaussian(noise_sigma(src, node));
}

}  // namespace cimsim

#include "bihap/harness/filter.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap::harness {

std::vector<Biquad> DesignButterworthLowpass(int order, double cutoff_hz,
                                             double sample_rate) {
  if (order < 1) {
    throw std::invalid_argument(fmt::format("Butterworth order must be >= 1 (got {})", order));
  }
  if (!(sample_rate > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
    throw std::invalid_argument(fmt::format(
        "Butterworth cutoff {} Hz must be in (0, Nyquist={} Hz)", cutoff_hz,
        sample_rate / 2.0));
  }
  const double k = std::tan(kPi * cutoff_hz / sample_rate);
  std::vector<Biquad> sections;

  if (order % 2 == 1) {
    Biquad s;
    s.b0 = k / (1.0 + k);
    s.b1 = s.b0;
    s.a1 = (k - 1.0) / (k + 1.0);
    sections.push_back(s);
  }
  for (int i = order / 2 - 1; i >= 0; --i) {
    const double theta = kPi * (2.0 * i + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    s.b0 = k * k * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> SosFilter(const std::vector<Biquad>& sections,
                              const std::vector<double>& x,
                              std::vector<std::array<double, 2>>& state) {
  if (state.size() != sections.size()) {
    throw std::invalid_argument("SosFilter: state size does not match sections");
  }
  std::vector<double> y = x;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    double z0 = state[s][0];
    double z1 = state[s][1];
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + z0;
      z0 = q.b1 * in - q.a1 * out + z1;
      z1 = q.b2 * in - q.a2 * out;
      v = out;
    }
    state[s] = {z0, z1};
  }
  return y;
}

std::vector<std::array<double, 2>> SosSteadyState(const std::vector<Biquad>& sections) {
  std::vector<std::array<double, 2>> zi(sections.size());
  double scale = 1.0;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    const double gain = q.DcGain();
    const double z1 = q.b2 - q.a2 * gain;
    const double z0 = q.b1 - q.a1 * gain + z1;
    zi[s] = {scale * z0, scale * z1};
    scale *= gain;
  }
  return zi;
}

namespace {

std::vector<std::array<double, 2>> Scaled(std::vector<std::array<double, 2>> zi, double k) {
  for (auto& z : zi) {
    z[0] *= k;
    z[1] *= k;
  }
  return zi;
}

}  // namespace

std::vector<double> SosFiltFilt(const std::vector<Biquad>& sections,
                                const std::vector<double>& x) {
  const bool has_first_order =
      std::any_of(sections.begin(), sections.end(),
                  [](const Biquad& q) { return q.b2 == 0.0 && q.a2 == 0.0; });
  const std::size_t pad =
      3 * (2 * sections.size() + 1 - (has_first_order ? 1 : 0));
  if (x.size() <= pad) {
    throw std::invalid_argument(fmt::format(
        "SosFiltFilt: need more than {} samples (got {})", pad, x.size()));
  }

  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) { ext.push_back(2.0 * x[0] - x[i]); }
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) { ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]); }

  const auto zi = SosSteadyState(sections);
  auto state = Scaled(zi, ext.front());
  std::vector<double> forward = SosFilter(sections, ext, state);

  std::reverse(forward.begin(), forward.end());
  state = Scaled(zi, forward.front());
  std::vector<double> backward = SosFilter(sections, forward, state);
  std::reverse(backward.begin(), backward.end());

  return std::vector<double>(backward.begin() + static_cast<std::ptrdiff_t>(pad),
                             backward.end() - static_cast<std::ptrdiff_t>(pad));
}

Signal Lowpass(const Signal& signal, double cutoff_hz, int order) {
  signal.Validate();
  if (!(cutoff_hz < signal.sample_rate / 2.0)) {
    throw std::invalid_argument(fmt::format(
        "Lowpass: cutoff {} Hz is not below Nyquist ({} Hz)", cutoff_hz,
        signal.sample_rate / 2.0));
  }
  const auto sections = DesignButterworthLowpass(order, cutoff_hz, signal.sample_rate);
  Signal out;
  out.sample_rate = signal.sample_rate;
  out.start_time = signal.start_time;
  out.samples = SosFiltFilt(sections, signal.samples);
  return out;
}

}  // namespace bihap::harness

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "pqfl/error.hpp"
#include "pqfl/pqc.hpp"

namespace pqfl::pqc {
namespace {

constexpr int kWarmupIterations = 3;

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

}  // namespace

DurationSummary summarize(std::vector<std::int64_t> samples_ns) {
  if (samples_ns.empty()) throw DomainError("summarize: no samples");
  std::sort(samples_ns.begin(), samples_ns.end());
  const std::size_t n = samples_ns.size();
  const auto p95_rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  return {samples_ns.front(), samples_ns[(n - 1) / 2], samples_ns[std::max<std::size_t>(p95_rank, 1) - 1]};
}

TimingReport timing_probe(std::string_view scheme_id, std::size_t message_len, std::size_t trials,
                          std::uint64_t seed) {
  if (trials == 0) throw DomainError("timing_probe: trials must be >= 1");
  require_scheme(scheme_id);

  std::mt19937_64 rng(seed);
  Bytes message(message_len);
  auto refill = [&] {
    for (auto& b : message) b = static_cast<std::uint8_t>(rng());
  };

  std::vector<std::int64_t> key_ns, sign_ns, verify_ns;
  key_ns.reserve(trials);
  sign_ns.reserve(trials);
  verify_ns.reserve(trials);

  try {
    for (int i = 0; i < kWarmupIterations; ++i) {
      refill();
      auto keys = keygen(scheme_id);
      auto sig = keys.sign(message);
      if (!verify(scheme_id, keys.public_key(), message, sig)) {
        throw ProbeError(std::string(scheme_id) + ": warm-up verification failed");
      }
    }
    for (std::size_t t = 0; t < trials; ++t) {
      refill();
      auto start = Clock::now();
      auto keys = keygen(scheme_id);
      key_ns.push_back(elapsed_ns(start));

      start = Clock::now();
      auto sig = keys.sign(message);
      sign_ns.push_back(elapsed_ns(start));

      start = Clock::now();
      const bool ok = verify(scheme_id, keys.public_key(), message, sig);
      verify_ns.push_back(elapsed_ns(start));
      if (!ok) throw ProbeError(std::string(scheme_id) + ": verification failed during probe");
    }
  } catch (const ProbeError&) {
    throw;
  } catch (const Error& e) {
    throw ProbeError(std::string("timing probe aborted: ") + e.what());
  }

  TimingReport report;
  report.scheme_id = std::string(scheme_id);
  report.trials = trials;
  report.message_len = message_len;
  report.key_gen = summarize(std::move(key_ns));
  report.sign = summarize(std::move(sign_ns));
  report.verify = summarize(std::move(verify_ns));
  return report;
}

std::string timing_csv_header() {
  return "scheme_id,message_len,trials,key_ns_med,sign_ns_med,verify_ns_med,sign_ns_p95,verify_ns_p95";
}

std::string timing_csv_row(const TimingReport& r) {
  std::ostringstream os;
  os << r.scheme_id << ',' << r.message_len << ',' << r.trials << ',' << r.key_gen.median_ns << ','
     << r.sign.median_ns << ',' << r.verify.median_ns << ',' << r.sign.p95_ns << ','
     << r.verify.p95_ns;
  return os.str();
}

}  // namespace pqfl::pqc

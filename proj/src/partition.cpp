#include <algorithm>

#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"

namespace pqfl::learning {

std::vector<int> PartitionSpec::classes_of(std::size_t client) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) out.push_back(static_cast<int>((client + static_cast<std::size_t>(j)) % static_cast<std::size_t>(n_classes)));
  return out;
}

PartitionSpec cycle_m_partition(const DatasetView& data, std::size_t n_clients, int m) {
  const int classes = data.n_classes();
  if (n_clients < 1) throw DomainError("cycle_m_partition: need at least one client");
  if (m < 1 || m > classes) throw DomainError("cycle_m_partition: m must be in [1, C]");

  PartitionSpec spec;
  spec.n_clients = n_clients;
  spec.m = m;
  spec.n_classes = classes;
  spec.assignment.resize(n_clients);

  // claimants[c]: clients whose window covers c, ascending.
  std::vector<std::vector<std::size_t>> claimants(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < n_clients; ++i) {
    for (int c : spec.classes_of(i)) claimants[static_cast<std::size_t>(c)].push_back(i);
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t k = 0; k < data.size(); ++k) {
    by_class[static_cast<std::size_t>(data.label(k))].push_back(data.indices()[k]);
  }

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& owners = claimants[c];
    if (owners.empty()) continue;
    const auto& samples = by_class[c];
    const std::size_t base = samples.size() / owners.size();
    const std::size_t extra = samples.size() % owners.size();
    std::size_t next = 0;
    for (std::size_t r = 0; r < owners.size(); ++r) {
      const std::size_t take = base + (r < extra ? 1 : 0);
      auto& dst = spec.assignment[owners[r]];
      dst.insert(dst.end(), samples.begin() + static_cast<std::ptrdiff_t>(next),
                 samples.begin() + static_cast<std::ptrdiff_t>(next + take));
      next += take;
    }
  }
  for (auto& a : spec.assignment) std::sort(a.begin(), a.end());
  return spec;
}

PartitionSpec cycle_m_partition(const Dataset& data, std::size_t n_clients, int m) {
  return cycle_m_partition(DatasetView(data), n_clients, m);
}

std::vector<std::vector<std::size_t>> class_histogram(const Dataset& data, const PartitionSpec& p) {
  std::vector<std::vector<std::size_t>> hist(p.n_clients,
                                             std::vector<std::size_t>(static_cast<std::size_t>(data.n_classes()), 0));
  for (std::size_t i = 0; i < p.n_clients; ++i) {
    for (auto idx : p.assignment[i]) ++hist[i][static_cast<std::size_t>(data.label(idx))];
  }
  return hist;
}

}  // namespace pqfl::learning

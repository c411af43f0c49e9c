#include "zonempc/coordination.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <future>
#include <ostream>

namespace zonempc {

namespace {

void mix(std::uint64_t& h, const Eigen::VectorXd& v) {
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  const std::size_t len = static_cast<std::size_t>(v.size()) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kPrime;
  }
  h ^= static_cast<std::uint64_t>(v.size());
  h *= kPrime;
}

}  // namespace

std::uint64_t payload_digest(const CoordinationMessage& msg) {
  std::uint64_t h = 14695981039346656037ULL;
  mix(h, msg.inputs);
  mix(h, msg.states);
  mix(h, msg.multipliers);
  mix(h, msg.consensus);
  return h;
}

MessageBus::MessageBus(int agents) : inboxes_(agents) {}

void MessageBus::set_round(int step, int round) {
  step_ = step;
  round_ = round;
}

void MessageBus::clear() {
  for (auto& box : inboxes_) box.clear();
}

void MessageBus::send(CoordinationMessage msg) {
  if (record_) transcript_.push_back({step_, round_, msg.sender, msg.receiver, payload_digest(msg)});
  const int to = msg.receiver;
  const int from = msg.sender;
  inboxes_.at(to)[from] = std::move(msg);
}

const std::map<int, CoordinationMessage>& MessageBus::inbox(int receiver) {
  auto& box = inboxes_.at(receiver);
  if (log_reads_) {
    std::lock_guard<std::mutex> lock(reads_mutex_);
    for (const auto& entry : box) reads_.emplace_back(receiver, entry.first);
  }
  return box;
}

void write_transcript(std::ostream& out, const std::vector<TranscriptEntry>& entries) {
  out << "step,round,sender,receiver,digest\n";
  char buf[24];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(e.digest));
    out << e.step << "," << e.round << "," << e.sender + 1 << "," << e.receiver + 1 << "," << buf << "\n";
  }
}

Eigen::VectorXd MeasurementPort::read(int agent, const std::vector<int>& zones, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(zones.size());
  for (std::size_t k = 0; k < zones.size(); ++k) {
    log_.emplace_back(agent, zones[k]);
    out(k) = y(zones[k]);
  }
  return out;
}

std::vector<double> run_agents(const std::vector<int>& order, int threads,
                               const std::function<void(int)>& fn) {
  std::vector<double> elapsed(order.size(), 0.0);
  auto timed = [&](std::size_t slot) {
    const auto t0 = std::chrono::steady_clock::now();
    fn(order[slot]);
    elapsed[slot] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (threads <= 1) {
    for (std::size_t s = 0; s < order.size(); ++s) timed(s);
    return elapsed;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t s = 0; s < order.size(); ++s) jobs.push_back(std::async(std::launch::async, timed, s));
  for (auto& j : jobs) j.get();
  return elapsed;
}

}  // namespace zonempc

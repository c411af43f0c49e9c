#pragma once

// Message passing between local controllers. Every delivered message is
// recorded so tests can check that agents only talk to their neighbors.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace zonempc {

struct CoordinationMessage {
  int sender = -1;
  int receiver = -1;
  Eigen::VectorXd inputs;       // planned inputs of the sender
  Eigen::VectorXd states;       // predicted sender states from the current sample on
  Eigen::VectorXd multipliers;  // prices owned by the sender
  Eigen::VectorXd consensus;    // consensus targets owned by the sender
};

// FNV-1a over the payload bytes.
std::uint64_t payload_digest(const CoordinationMessage& msg);

struct TranscriptEntry {
  int step = 0;
  int round = 0;
  int sender = 0;
  int receiver = 0;
  std::uint64_t digest = 0;
};

class MessageBus {
 public:
  explicit MessageBus(int agents = 0);

  void set_round(int step, int round);
  // Starts a new exchange: inboxes are emptied.
  void clear();
  void send(CoordinationMessage msg);
  // Messages delivered to `receiver` in the current exchange, keyed by sender.
  const std::map<int, CoordinationMessage>& inbox(int receiver);

  // Transcript and read log are test instrumentation and off by default.
  void record_transcript(bool on) { record_ = on; }
  void log_reads(bool on) { log_reads_ = on; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  void clear_transcript() { transcript_.clear(); }
  // (receiver, sender) pairs read through inbox() while logging is on.
  const std::vector<std::pair<int, int>>& reads() const { return reads_; }
  void clear_reads() { reads_.clear(); }

 private:
  std::vector<std::map<int, CoordinationMessage>> inboxes_;
  std::vector<TranscriptEntry> transcript_;
  std::vector<std::pair<int, int>> reads_;
  std::mutex reads_mutex_;
  bool record_ = false;
  bool log_reads_ = false;
  int step_ = 0;
  int round_ = 0;
};

// Writes "step,round,sender,receiver,digest" lines; ids are 1-based.
void write_transcript(std::ostream& out, const std::vector<TranscriptEntry>& entries);

// Gives each agent its own measurement slice and logs who read which zone.
class MeasurementPort {
 public:
  Eigen::VectorXd read(int agent, const std::vector<int>& zones, const Eigen::VectorXd& y);
  const std::vector<std::pair<int, int>>& log() const { return log_; }
  void clear() { log_.clear(); }

 private:
  std::vector<std::pair<int, int>> log_;  // (agent, zone)
};

// Runs fn(agent) for every agent in `order`, sequentially or on `threads`
// worker threads, and returns each agent's elapsed seconds.
std::vector<double> run_agents(const std::vector<int>& order, int threads,
                               const std::function<void(int)>& fn);

}  // namespace zonempc

#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace gridveil::protocol {

enum class PayloadKind {
  Plain,       // raw state value (plaintext modes only)
  Ciphertext,  // Paillier ciphertext, decimal string
  Masked,      // fixed-point value plus a secret offset
  PublicKey,   // modulus n of the sender's key
};

const char* payload_kind_name(PayloadKind k);
PayloadKind payload_kind_from_name(const std::string& name);

struct Envelope {
  int round = 0;
  int phase = 0;
  int sender = 0;
  int recipient = 0;
  PayloadKind kind = PayloadKind::Plain;
  std::string tag;                   // what the payload is, e.g. "v", "e", "flow_p:s1"
  std::vector<std::string> payload;  // decimal strings
  std::size_t bytes = 0;

  std::string to_json() const;
  static Envelope from_json(const std::string& line);
};

/// JSON-lines transcript. The first line is a header object; every other line
/// is one envelope.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::string& path);
  void header(const std::string& json_object);
  void record(const Envelope& e);
  void flush();

 private:
  std::ofstream out_;
  std::mutex mu_;
};

struct Transcript {
  std::string header_json;
  std::vector<Envelope> envelopes;
};

Transcript read_transcript(const std::string& path);

/// In-process channel layer with lockstep delivery. Messages posted during a
/// (round, phase) become visible only after close_phase; replays and messages
/// for an already closed phase are rejected with ProtocolError.
class MessageBus {
 public:
  explicit MessageBus(int agents);

  void set_transcript(TranscriptWriter* writer) { transcript_ = writer; }

  void post(Envelope e);

  /// Barrier: delivers everything posted for (round, phase) in a fixed order.
  void close_phase(int round, int phase);

  /// Messages delivered to `recipient` by the last close_phase.
  const std::vector<Envelope>& inbox(int recipient) const { return inbox_.at(recipient); }

  std::size_t message_count() const { return messages_; }
  std::size_t byte_count() const { return bytes_; }

 private:
  using Key = std::tuple<int, int, int, int, std::string>;
  std::vector<std::vector<Envelope>> pending_;
  std::vector<std::vector<Envelope>> inbox_;
  std::set<Key> seen_;
  int closed_round_ = -1;
  int closed_phase_ = -1;
  std::size_t messages_ = 0;
  std::size_t bytes_ = 0;
  TranscriptWriter* transcript_ = nullptr;
  std::mutex mu_;
};

}  // namespace gridveil::protocol

#include "gridveil/messages.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridveil/errors.hpp"

namespace gridveil::protocol {

using nlohmann::json;

const char* payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::Plain: return "plain";
    case PayloadKind::Ciphertext: return "ciphertext";
    case PayloadKind::Masked: return "masked";
    case PayloadKind::PublicKey: return "public_key";
  }
  return "?";
}

PayloadKind payload_kind_from_name(const std::string& name) {
  if (name == "plain") return PayloadKind::Plain;
  if (name == "ciphertext") return PayloadKind::Ciphertext;
  if (name == "masked") return PayloadKind::Masked;
  if (name == "public_key") return PayloadKind::PublicKey;
  throw ProtocolError("unknown payload kind '" + name + "'");
}

std::string Envelope::to_json() const {
  json j{{"round", round},   {"phase", phase}, {"sender", sender},   {"recipient", recipient},
         {"type", payload_kind_name(kind)}, {"tag", tag}, {"payload", payload}, {"bytes", bytes}};
  return j.dump();
}

Envelope Envelope::from_json(const std::string& line) {
  const json j = json::parse(line);
  Envelope e;
  e.round = j.at("round").get<int>();
  e.phase = j.value("phase", 0);
  e.sender = j.at("sender").get<int>();
  e.recipient = j.at("recipient").get<int>();
  e.kind = payload_kind_from_name(j.at("type").get<std::string>());
  e.tag = j.value("tag", "");
  e.payload = j.value("payload", std::vector<std::string>{});
  e.bytes = j.value("bytes", std::size_t{0});
  return e;
}

TranscriptWriter::TranscriptWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open transcript file " + path);
}

void TranscriptWriter::header(const std::string& json_object) {
  std::lock_guard lock(mu_);
  out_ << json_object << '\n';
}

void TranscriptWriter::record(const Envelope& e) {
  std::lock_guard lock(mu_);
  out_ << e.to_json() << '\n';
}

void TranscriptWriter::flush() {
  std::lock_guard lock(mu_);
  out_.flush();
}

Transcript read_transcript(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open transcript " + path);
  Transcript t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      t.header_json = line;
      first = false;
      continue;
    }
    t.envelopes.push_back(Envelope::from_json(line));
  }
  if (first) throw ConfigError("transcript " + path + " is empty");
  return t;
}

MessageBus::MessageBus(int agents) : pending_(agents + 1), inbox_(agents + 1) {}

void MessageBus::post(Envelope e) {
  std::lock_guard lock(mu_);
  if (e.recipient < 0 || e.recipient >= static_cast<int>(pending_.size()))
    throw ProtocolError("message for unknown agent " + std::to_string(e.recipient));
  if (e.round < closed_round_ || (e.round == closed_round_ && e.phase <= closed_phase_))
    throw ProtocolError("message for a closed phase (round " + std::to_string(e.round) + ")");
  Key key{e.round, e.phase, e.sender, e.recipient, e.tag};
  if (!seen_.insert(key).second)
    throw ProtocolError("replayed message " + e.tag + " from " + std::to_string(e.sender) + " to " +
                        std::to_string(e.recipient) + " in round " + std::to_string(e.round));
  if (e.bytes == 0)
    for (const auto& s : e.payload) e.bytes += s.size();
  pending_[e.recipient].push_back(std::move(e));
}

void MessageBus::close_phase(int round, int phase) {
  std::lock_guard lock(mu_);
  for (std::size_t r = 0; r < pending_.size(); ++r) {
    auto& box = pending_[r];
    for (const auto& e : box)
      if (e.round != round || e.phase != phase)
        throw ProtocolError("message from a different phase left pending");
    std::sort(box.begin(), box.end(), [](const Envelope& a, const Envelope& b) {
      return std::tie(a.sender, a.tag) < std::tie(b.sender, b.tag);
    });
    for (const auto& e : box) {
      ++messages_;
      bytes_ += e.bytes;
      if (transcript_) transcript_->record(e);
    }
    inbox_[r] = std::move(box);
    box.clear();
  }
  closed_round_ = round;
  closed_phase_ = phase;
  // Keys of closed phases can never match again, so the replay set stays small.
  seen_.clear();
}

}  // namespace gridveil::protocol

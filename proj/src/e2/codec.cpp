#include "oranlab/e2/codec.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <type_traits>

namespace oranlab::e2 {

namespace {

constexpr std::string_view kMagic = "E2LITE/1 ";

// ---- encoding ---------------------------------------------------------------

template <typename T>
void put_number(std::string& out, T v) {
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw EncodeError("non-finite value in KPM record");
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

template <typename T>
void put_field(std::string& out, std::string_view key, T v) {
  out.append(key);
  out.push_back('=');
  if constexpr (std::is_same_v<T, bool>) {
    out.push_back(v ? '1' : '0');
  } else if constexpr (std::is_arithmetic_v<T>) {
    put_number(out, v);
  } else {
    out.append(v);
  }
  out.push_back('\n');
}

void put_record(std::string& out, const KpmRecord& r) {
  out.append("rec=");
  put_number(out, r.timestamp_ms);
  out.push_back(',');
  put_number(out, r.bs_id);
  out.push_back(',');
  put_number(out, r.ue_id);
  out.push_back(',');
  out.append(to_string(r.slice));
  out.push_back(',');
  put_number(out, r.dl_mcs);
  out.push_back(',');
  put_number(out, r.dl_tx_symbols);
  out.push_back(',');
  put_number(out, r.dl_buffer);
  out.push_back(',');
  put_number(out, r.dl_rate);
  out.push_back(',');
  put_number(out, r.dl_phy_tbs);
  out.push_back(',');
  put_number(out, r.dl_cqi);
  out.push_back(',');
  put_number(out, r.ul_buffer);
  out.push_back(',');
  put_number(out, r.ul_rate);
  out.push_back(',');
  put_number(out, r.ul_errors);
  out.push_back(',');
  put_number(out, r.granted_prbs);
  out.push_back(',');
  put_number(out, r.requested_prbs);
  out.push_back('\n');
}

struct BodyWriter {
  std::string& out;

  void operator()(const SetupRequest& m) const {
    put_field(out, "bs_id", m.bs_id);
    std::string list;
    for (std::size_t i = 0; i < m.supported_sm_ids.size(); ++i) {
      if (i) list.push_back(',');
      list.append(to_string(m.supported_sm_ids[i]));
    }
    put_field(out, "sm_ids", std::string_view(list));
  }
  void operator()(const SetupResponse& m) const { put_field(out, "accepted", m.accepted); }
  void operator()(const SubscriptionRequest& m) const {
    put_field(out, "sub_id", m.sub_id);
    put_field(out, "sm_id", to_string(m.sm_id));
    put_field(out, "report_period_ms", m.report_period_ms);
    put_field(out, "trigger", to_string(m.trigger));
  }
  void operator()(const SubscriptionResponse& m) const {
    put_field(out, "sub_id", m.sub_id);
    put_field(out, "accepted", m.accepted);
  }
  void operator()(const Indication& m) const {
    put_field(out, "sub_id", m.sub_id);
    put_field(out, "bs_id", m.bs_id);
    put_field(out, "seq_no", m.seq_no);
    put_field(out, "records", m.payload.size());
    for (const auto& r : m.payload) put_record(out, r);
  }
  void operator()(const ControlRequest& m) const {
    for (int n : m.slicing.prbs) {
      if (n < 0) throw EncodeError("negative PRB count in slicing profile");
    }
    put_field(out, "bs_id", m.bs_id);
    put_field(out, "seq_no", m.seq_no);
    put_field(out, "slicing", std::string_view(format_slicing(m.slicing)));
    put_field(out, "scheduling", std::string_view(format_scheduling(m.scheduling)));
  }
  void operator()(const ControlAck& m) const {
    put_field(out, "seq_no", m.seq_no);
    put_field(out, "status", to_string(m.status));
  }
};

// ---- decoding ---------------------------------------------------------------

struct ParseFailure {
  DecodeStatus status;
  std::size_t offset;
  std::string detail;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == text_.size(); }

  [[noreturn]] void fail(std::string detail, std::size_t at) const {
    throw ParseFailure{DecodeStatus::ProtocolError, at, std::move(detail)};
  }
  [[noreturn]] void fail(std::string detail) const { fail(std::move(detail), pos_); }

  void expect(std::string_view lit) {
    if (text_.substr(pos_, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
    pos_ += lit.size();
  }

  std::string_view until(char delim) {
    auto end = text_.find(delim, pos_);
    if (end == std::string_view::npos) fail(std::string("missing '") + (delim == '\n' ? "\\n" : std::string(1, delim)) + "'");
    auto out = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  /// "key=value\n"; returns value and records its offset.
  std::string_view field(std::string_view key) {
    expect(key);
    expect("=");
    value_at_ = pos_;
    return until('\n');
  }

  template <typename T>
  T number(std::string_view token, std::size_t at) const {
    T v{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
      fail("invalid number '" + std::string(token) + "'", at);
    }
    return v;
  }

  template <typename T>
  T number_field(std::string_view key) {
    auto v = field(key);
    return number<T>(v, value_at_);
  }

  bool bool_field(std::string_view key) {
    auto v = field(key);
    if (v == "1") return true;
    if (v == "0") return false;
    fail("expected 0 or 1", value_at_);
  }

  std::size_t value_at() const { return value_at_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t value_at_ = 0;
};

KpmRecord parse_record(Parser& p) {
  p.expect("rec=");
  const std::size_t start = p.pos();
  auto line = p.until('\n');
  KpmRecord r;
  std::size_t field_no = 0;
  std::size_t cursor = 0;
  auto next = [&]() -> std::pair<std::string_view, std::size_t> {
    if (cursor > line.size()) p.fail("record has too few fields", start + line.size());
    auto end = line.find(',', cursor);
    if (end == std::string_view::npos) end = line.size();
    auto tok = line.substr(cursor, end - cursor);
    std::size_t at = start + cursor;
    cursor = end + 1;
    ++field_no;
    return {tok, at};
  };
  auto [t0, a0] = next();
  r.timestamp_ms = p.number<std::int64_t>(t0, a0);
  auto [t1, a1] = next();
  r.bs_id = p.number<BsId>(t1, a1);
  auto [t2, a2] = next();
  r.ue_id = p.number<UeId>(t2, a2);
  auto [t3, a3] = next();
  auto slice = parse_slice(t3);
  if (!slice) p.fail("unknown slice '" + std::string(t3) + "'", a3);
  r.slice = *slice;
  auto [t4, a4] = next();
  r.dl_mcs = p.number<double>(t4, a4);
  auto [t5, a5] = next();
  r.dl_tx_symbols = p.number<std::uint64_t>(t5, a5);
  auto [t6, a6] = next();
  r.dl_buffer = p.number<std::uint64_t>(t6, a6);
  auto [t7, a7] = next();
  r.dl_rate = p.number<double>(t7, a7);
  auto [t8, a8] = next();
  r.dl_phy_tbs = p.number<std::uint64_t>(t8, a8);
  auto [t9, a9] = next();
  r.dl_cqi = p.number<double>(t9, a9);
  auto [t10, a10] = next();
  r.ul_buffer = p.number<std::uint64_t>(t10, a10);
  auto [t11, a11] = next();
  r.ul_rate = p.number<double>(t11, a11);
  auto [t12, a12] = next();
  r.ul_errors = p.number<std::uint64_t>(t12, a12);
  auto [t13, a13] = next();
  r.granted_prbs = p.number<double>(t13, a13);
  auto [t14, a14] = next();
  r.requested_prbs = p.number<double>(t14, a14);
  if (cursor <= line.size()) p.fail("record has too many fields", start + cursor);
  return r;
}

E2Message parse_message(Parser& p, std::string_view tag, std::size_t tag_at) {
  if (tag == "SETUP_REQUEST") {
    SetupRequest m;
    m.bs_id = p.number_field<BsId>("bs_id");
    auto list = p.field("sm_ids");
    std::size_t base = p.value_at();
    std::size_t cursor = 0;
    while (!list.empty() && cursor <= list.size()) {
      auto end = list.find(',', cursor);
      if (end == std::string_view::npos) end = list.size();
      auto tok = list.substr(cursor, end - cursor);
      auto id = parse_sm_id(tok);
      if (!id) p.fail("unknown service model '" + std::string(tok) + "'", base + cursor);
      m.supported_sm_ids.push_back(*id);
      cursor = end + 1;
    }
    return m;
  }
  if (tag == "SETUP_RESPONSE") {
    return SetupResponse{p.bool_field("accepted")};
  }
  if (tag == "SUBSCRIPTION_REQUEST") {
    SubscriptionRequest m;
    m.sub_id = p.number_field<SubId>("sub_id");
    auto sm = p.field("sm_id");
    auto id = parse_sm_id(sm);
    if (!id) p.fail("unknown service model '" + std::string(sm) + "'", p.value_at());
    m.sm_id = *id;
    m.report_period_ms = p.number_field<std::uint32_t>("report_period_ms");
    auto trig = p.field("trigger");
    auto t = parse_trigger(trig);
    if (!t) p.fail("unknown trigger '" + std::string(trig) + "'", p.value_at());
    m.trigger = *t;
    return m;
  }
  if (tag == "SUBSCRIPTION_RESPONSE") {
    SubscriptionResponse m;
    m.sub_id = p.number_field<SubId>("sub_id");
    m.accepted = p.bool_field("accepted");
    return m;
  }
  if (tag == "INDICATION") {
    Indication m;
    m.sub_id = p.number_field<SubId>("sub_id");
    m.bs_id = p.number_field<BsId>("bs_id");
    m.seq_no = p.number_field<SeqNo>("seq_no");
    const auto n = p.number_field<std::size_t>("records");
    // Each record takes well over 16 bytes; bound before reserving.
    if (n > kMaxFrameBody / 16) p.fail("record count too large", p.value_at());
    m.payload.reserve(n);
    for (std::size_t i = 0; i < n; ++i) m.payload.push_back(parse_record(p));
    return m;
  }
  if (tag == "CONTROL_REQUEST") {
    ControlRequest m;
    m.bs_id = p.number_field<BsId>("bs_id");
    m.seq_no = p.number_field<SeqNo>("seq_no");
    auto sl = p.field("slicing");
    auto slicing = parse_slicing(sl);
    if (!slicing) p.fail("malformed slicing '" + std::string(sl) + "'", p.value_at());
    m.slicing = *slicing;
    auto sc = p.field("scheduling");
    auto sched = parse_scheduling(sc);
    if (!sched) p.fail("malformed scheduling '" + std::string(sc) + "'", p.value_at());
    m.scheduling = *sched;
    return m;
  }
  if (tag == "CONTROL_ACK") {
    ControlAck m;
    m.seq_no = p.number_field<SeqNo>("seq_no");
    auto st = p.field("status");
    auto s = parse_control_status(st);
    if (!s) p.fail("unknown control status '" + std::string(st) + "'", p.value_at());
    m.status = *s;
    return m;
  }
  throw ParseFailure{DecodeStatus::UnknownMessage, tag_at, "unknown message tag '" + std::string(tag) + "'"};
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

std::string_view to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::NeedMoreBytes: return "NeedMoreBytes";
    case DecodeStatus::ProtocolError: return "ProtocolError";
    case DecodeStatus::UnknownMessage: return "UnknownMessage";
  }
  return "?";
}

std::string encode_body(const E2Message& msg) {
  std::string out;
  out.append(kMagic);
  out.append(message_tag(msg));
  out.push_back('\n');
  std::visit(BodyWriter{out}, msg);
  return out;
}

std::vector<std::uint8_t> encode(const E2Message& msg) {
  const std::string body = encode_body(msg);
  if (body.size() > kMaxFrameBody) {
    throw EncodeError("frame body of " + std::to_string(body.size()) + " bytes exceeds the " +
                      std::to_string(kMaxFrameBody) + " byte limit");
  }
  std::vector<std::uint8_t> frame(kLengthPrefix + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  frame[0] = static_cast<std::uint8_t>(n >> 24);
  frame[1] = static_cast<std::uint8_t>(n >> 16);
  frame[2] = static_cast<std::uint8_t>(n >> 8);
  frame[3] = static_cast<std::uint8_t>(n);
  std::memcpy(frame.data() + kLengthPrefix, body.data(), body.size());
  return frame;
}

DecodeResult decode_body(std::string_view body) {
  DecodeResult res;
  Parser p(body);
  try {
    p.expect(kMagic);
    const std::size_t tag_at = p.pos();
    auto tag = p.until('\n');
    auto msg = parse_message(p, tag, tag_at);
    if (!p.at_end()) p.fail("trailing bytes in body");
    // Canonical-form check: anything that parses but would not be produced by
    // the encoder (leading zeros, "+1", alternative float spellings) is refused.
    const std::string canon = encode_body(msg);
    if (canon != body) {
      std::size_t i = 0;
      while (i < canon.size() && i < body.size() && canon[i] == body[i]) ++i;
      p.fail("non-canonical encoding", i);
    }
    res.status = DecodeStatus::Ok;
    res.message = std::move(msg);
  } catch (const ParseFailure& f) {
    res.status = f.status;
    res.error_offset = f.offset;
    res.detail = f.detail;
  }
  res.consumed = body.size();
  return res;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  DecodeResult res;
  if (bytes.size() < kLengthPrefix) {
    res.status = DecodeStatus::NeedMoreBytes;
    res.detail = "length prefix incomplete";
    return res;
  }
  const std::uint32_t len = read_be32(bytes.data());
  if (len > kMaxFrameBody) {
    res.status = DecodeStatus::ProtocolError;
    res.error_offset = 0;
    res.detail = "frame length " + std::to_string(len) + " exceeds the " + std::to_string(kMaxFrameBody) + " byte limit";
    return res;
  }
  if (bytes.size() < kLengthPrefix + len) {
    res.status = DecodeStatus::NeedMoreBytes;
    res.detail = "frame incomplete";
    return res;
  }
  std::string_view body(reinterpret_cast<const char*>(bytes.data()) + kLengthPrefix, len);
  res = decode_body(body);
  res.consumed = kLengthPrefix + len;
  res.residual = bytes.size() - res.consumed;
  if (!res.ok()) res.error_offset += kLengthPrefix;
  return res;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (head_ > 0 && head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<DecodeResult> StreamDecoder::next() {
  if (poisoned_) return poisoned_;
  auto view = std::span<const std::uint8_t>(buf_).subspan(head_);
  auto res = decode(view);
  if (res.status == DecodeStatus::NeedMoreBytes) return std::nullopt;
  if (res.consumed == 0) {
    poisoned_ = res;
    return res;
  }
  head_ += res.consumed;
  // Compact once the consumed prefix dominates the buffer.
  if (head_ > 4096 && head_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }
  return res;
}

void StreamDecoder::reset() {
  buf_.clear();
  head_ = 0;
  poisoned_.reset();
}

}  // namespace oranlab::e2

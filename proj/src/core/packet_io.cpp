#include "core/packet_io.hpp"

#include <cstring>
#include <istream>
#include <json.hpp>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace flowsentry {

std::string packet_csv_header() { return "timestamp_us,src,dst,sport,dport,proto,flags"; }

std::string tcp_flags_to_string(std::uint8_t flags) {
  std::string s;
  if (flags & tcp_flag::kSyn) s += 'S';
  if (flags & tcp_flag::kFin) s += 'F';
  if (flags & tcp_flag::kRst) s += 'R';
  if (flags & tcp_flag::kAck) s += 'A';
  return s;
}

std::uint8_t tcp_flags_from_string(const std::string& s) {
  std::uint8_t flags = 0;
  for (char c : s) {
    switch (c) {
      case 'S': flags |= tcp_flag::kSyn; break;
      case 'F': flags |= tcp_flag::kFin; break;
      case 'R': flags |= tcp_flag::kRst; break;
      case 'A': flags |= tcp_flag::kAck; break;
      default: fail(Errc::Parse, std::string("unknown TCP flag letter: ") + c);
    }
  }
  return flags;
}

std::string packet_csv_row(const PacketRecord& p) {
  std::string row = std::to_string(p.timestamp_us);
  row += ',';
  row += p.src;
  row += ',';
  row += p.dst;
  row += ',';
  row += std::to_string(p.src_port);
  row += ',';
  row += std::to_string(p.dst_port);
  row += ',';
  row += std::to_string(p.protocol);
  row += ',';
  row += tcp_flags_to_string(p.tcp_flags);
  return row;
}

PacketCsvReader::PacketCsvReader(std::istream& in) : in_(in) {}

bool PacketCsvReader::next(PacketRecord& out) {
  std::string line;
  while (std::getline(in_, line)) {
    if (line.empty()) continue;
    if (!header_checked_) {
      header_checked_ = true;
      if (line.rfind("timestamp_us", 0) == 0) continue;  // optional header
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) {
      ++stats_.records_skipped;
      continue;
    }
    try {
      std::size_t pos = 0;
      const long long ts = std::stoll(cells[0], &pos);
      if (pos != cells[0].size() || ts < 0) throw std::invalid_argument("ts");
      const int sport = std::stoi(cells[3]);
      const int dport = std::stoi(cells[4]);
      const int proto = std::stoi(cells[5]);
      if (sport < 0 || sport > 65535 || dport < 0 || dport > 65535 || proto < 0 || proto > 255)
        throw std::out_of_range("field range");
      out.timestamp_us = ts;
      out.src = cells[1];
      out.dst = cells[2];
      out.src_port = static_cast<std::uint16_t>(sport);
      out.dst_port = static_cast<std::uint16_t>(dport);
      out.protocol = static_cast<std::uint8_t>(proto);
      out.tcp_flags = tcp_flags_from_string(cells[6]);
    } catch (const std::exception&) {
      ++stats_.records_skipped;
      continue;
    }
    ++stats_.records_read;
    return true;
  }
  return false;
}

namespace {

std::uint32_t read_u32(const unsigned char* p, bool swap) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  if (swap) v = __builtin_bswap32(v);
  return v;
}

std::uint16_t read_u16be(const unsigned char* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::string ipv4_to_string(const unsigned char* p) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
  return buf;
}

}  // namespace

void read_pcap(std::istream& in, const std::function<void(const PacketRecord&)>& sink,
               PacketIoStats* stats) {
  PacketIoStats local;
  PacketIoStats& st = stats ? *stats : local;

  unsigned char ghdr[24];
  in.read(reinterpret_cast<char*>(ghdr), 24);
  if (in.gcount() != 24) fail(Errc::Parse, "pcap: truncated global header");

  std::uint32_t magic;
  std::memcpy(&magic, ghdr, 4);
  bool swap = false;
  bool nanos = false;
  switch (magic) {
    case 0xa1b2c3d4u: break;
    case 0xd4c3b2a1u: swap = true; break;
    case 0xa1b23c4du: nanos = true; break;
    case 0x4d3cb2a1u: swap = true; nanos = true; break;
    default: fail(Errc::Parse, "pcap: bad magic number");
  }
  const std::uint32_t linktype = read_u32(ghdr + 20, swap);
  if (linktype != 1) fail(Errc::Parse, "pcap: only Ethernet link type is supported");

  std::vector<unsigned char> frame;
  unsigned char rhdr[16];
  while (in.read(reinterpret_cast<char*>(rhdr), 16)) {
    const std::uint32_t ts_sec = read_u32(rhdr, swap);
    const std::uint32_t ts_frac = read_u32(rhdr + 4, swap);
    const std::uint32_t incl_len = read_u32(rhdr + 8, swap);
    if (incl_len > 262144) fail(Errc::Parse, "pcap: implausible record length");
    frame.resize(incl_len);
    in.read(reinterpret_cast<char*>(frame.data()), incl_len);
    if (static_cast<std::uint32_t>(in.gcount()) != incl_len)
      fail(Errc::Parse, "pcap: truncated record");

    PacketRecord p;
    p.timestamp_us = static_cast<std::int64_t>(ts_sec) * 1'000'000 +
                     (nanos ? ts_frac / 1000 : ts_frac);

    // Ethernet header.
    if (incl_len < 14 || read_u16be(frame.data() + 12) != 0x0800) {
      ++st.records_skipped;
      continue;
    }
    const unsigned char* ip = frame.data() + 14;
    const std::size_t ip_avail = incl_len - 14;
    if (ip_avail < 20 || (ip[0] >> 4) != 4) {
      ++st.records_skipped;
      continue;
    }
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    if (ihl < 20 || ip_avail < ihl) {
      ++st.records_skipped;
      continue;
    }
    p.protocol = ip[9];
    p.src = ipv4_to_string(ip + 12);
    p.dst = ipv4_to_string(ip + 16);

    const unsigned char* l4 = ip + ihl;
    const std::size_t l4_avail = ip_avail - ihl;
    if (p.protocol == kProtoTcp) {
      if (l4_avail < 14) {
        ++st.records_skipped;
        continue;
      }
      p.src_port = read_u16be(l4);
      p.dst_port = read_u16be(l4 + 2);
      const unsigned char tf = l4[13];
      if (tf & 0x01) p.tcp_flags |= tcp_flag::kFin;
      if (tf & 0x02) p.tcp_flags |= tcp_flag::kSyn;
      if (tf & 0x04) p.tcp_flags |= tcp_flag::kRst;
      if (tf & 0x10) p.tcp_flags |= tcp_flag::kAck;
    } else if (p.protocol == kProtoUdp) {
      if (l4_avail < 8) {
        ++st.records_skipped;
        continue;
      }
      p.src_port = read_u16be(l4);
      p.dst_port = read_u16be(l4 + 2);
    } else {
      ++st.records_skipped;
      continue;
    }
    ++st.records_read;
    sink(p);
  }
}

std::string flow_record_to_jsonl(const FlowRecord& flow) {
  nlohmann::json j;
  j["src"] = flow.key.src;
  j["dst"] = flow.key.dst;
  j["sport"] = flow.key.src_port;
  j["dport"] = flow.key.dst_port;
  j["proto"] = flow.key.protocol;
  j["first_ts"] = flow.first_ts;
  j["last_ts"] = flow.last_ts;
  j["fwd"] = flow.fwd_timestamps;
  j["bwd"] = flow.bwd_timestamps;
  j["cause"] = termination_cause_name(flow.cause);
  return j.dump();
}

FlowRecord flow_record_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    FlowRecord flow;
    flow.key.src = j.at("src").get<std::string>();
    flow.key.dst = j.at("dst").get<std::string>();
    flow.key.src_port = j.at("sport").get<std::uint16_t>();
    flow.key.dst_port = j.at("dport").get<std::uint16_t>();
    flow.key.protocol = j.at("proto").get<std::uint8_t>();
    flow.first_ts = j.at("first_ts").get<std::int64_t>();
    flow.last_ts = j.at("last_ts").get<std::int64_t>();
    flow.fwd_timestamps = j.at("fwd").get<std::vector<std::int64_t>>();
    flow.bwd_timestamps = j.at("bwd").get<std::vector<std::int64_t>>();
    flow.cause = termination_cause_from_string(j.at("cause").get<std::string>());
    return flow;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Parse, std::string("bad flow record line: ") + e.what());
  }
}

}  // namespace flowsentry

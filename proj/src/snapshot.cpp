#include "evtrack/snapshot.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evtrack/error.hpp"

namespace evtrack {
namespace {

constexpr char kMagic[8] = {'E', 'V', 'T', 'R', 'S', 'N', 'A', 'P'};

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void raw(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void u8(std::uint8_t v) { raw(v); }
  void u32(std::uint32_t v) { raw(v); }
  void u64(std::uint64_t v) { raw(v); }
  void i64(std::int64_t v) { raw(v); }
  void f64(double v) { raw(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <class T>
  T raw() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return raw<std::uint8_t>(); }
  std::uint32_t u32() { return raw<std::uint32_t>(); }
  std::uint64_t u64() { return raw<std::uint64_t>(); }
  std::int64_t i64() { return raw<std::int64_t>(); }
  double f64() { return std::bit_cast<double>(raw<std::uint64_t>()); }
  std::string str() {
    std::uint64_t n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::uint64_t count(std::size_t min_item_bytes) {
    std::uint64_t n = u64();
    if (min_item_bytes && n > (data_.size() - pos_) / min_item_bytes) {
      throw Error(ErrorCode::CorruptSnapshot, "implausible element count");
    }
    return n;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptSnapshot, "truncated payload");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string_view open_envelope(std::string_view bytes, std::uint32_t* version_out) {
  constexpr std::size_t header = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < header || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::CorruptSnapshot, "not a snapshot file");
  }
  Reader r(bytes.substr(sizeof(kMagic), 12));
  std::uint32_t version = r.u32();
  std::uint64_t length = r.u64();
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::VersionMismatch, "snapshot version " + std::to_string(version) +
                                                ", expected " + std::to_string(kSnapshotVersion));
  }
  if (bytes.size() - header < 8 || length != bytes.size() - header - 8) {
    throw Error(ErrorCode::CorruptSnapshot, "length mismatch");
  }
  std::string_view payload = bytes.substr(header, length);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + header + length, 8);
  if (stored != fnv1a(payload)) throw Error(ErrorCode::CorruptSnapshot, "checksum mismatch");
  if (version_out) *version_out = version;
  return payload;
}

}  // namespace

std::string serialize_snapshot(const Engine& engine, const EngineConfig& config) {
  const PostNetwork& net = engine.network();
  Writer w;
  w.str(config_to_json(config));
  w.i64(net.now());
  w.u64(net.next_seq());
  w.u64(engine.next_cluster_id());
  w.u64(net.size());
  std::uint64_t edges = 0;
  net.for_each_node([&](const Node& n) {
    w.u64(n.seq);
    w.i64(n.moment);
    w.str(n.post.id);
    w.i64(n.post.timestamp);
    w.str(n.post.author);
    w.str(n.post.text);
    w.u64(n.post.entities.size());
    for (const auto& e : n.post.entities) w.str(e);
    w.u8(n.track.core ? 1 : 0);
    w.u32(n.track.slot);
    for (const Edge& e : n.edges) edges += e.to > n.seq;
  });
  w.u64(edges);
  net.for_each_node([&](const Node& n) {
    for (const Edge& e : n.edges) {
      if (e.to <= n.seq) continue;
      w.u64(n.seq);
      w.u64(e.to);
      w.f64(e.weight);
    }
  });
  auto slots = engine.slot_records();
  w.u64(slots.size());
  for (const auto& s : slots) {
    w.u32(s.slot);
    w.u64(s.id);
    w.i64(s.born_at);
    w.u64(s.lineage.size());
    for (ClusterId p : s.lineage) w.u64(p);
  }

  std::string out(kMagic, sizeof(kMagic));
  Writer head;
  head.u32(kSnapshotVersion);
  head.u64(w.bytes().size());
  out += head.bytes();
  out += w.bytes();
  Writer tail;
  tail.u64(fnv1a(w.bytes()));
  out += tail.bytes();
  return out;
}

LoadedSnapshot deserialize_snapshot(std::string_view bytes) {
  Reader r(open_envelope(bytes, nullptr));
  LoadedSnapshot loaded;
  try {
    loaded.config = config_from_json(r.str());
    loaded.config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptSnapshot, std::string("bad embedded config: ") + e.what());
  }
  const Moment now = r.i64();
  const Seq next_seq = r.u64();
  const ClusterId next_id = r.u64();
  loaded.engine = std::make_unique<Engine>(loaded.config.similarity, loaded.config.window,
                                           loaded.config.track);
  PostNetwork& net = loaded.engine->mutable_network();
  std::vector<std::pair<Seq, bool>> flags;
  const std::uint64_t nodes = r.count(8 * 6);
  for (std::uint64_t i = 0; i < nodes; ++i) {
    Seq seq = r.u64();
    Moment moment = r.i64();
    Post p;
    p.id = r.str();
    p.timestamp = r.i64();
    p.author = r.str();
    p.text = r.str();
    const std::uint64_t ne = r.count(8);
    for (std::uint64_t k = 0; k < ne; ++k) p.entities.push_back(r.str());
    bool core = r.u8() != 0;
    Slot slot = r.u32();
    if (seq >= next_seq) throw Error(ErrorCode::CorruptSnapshot, "node seq beyond counter");
    net.restore_node(seq, std::move(p), moment);
    net.track_state(seq).slot = core ? slot : kNoSlot;
    flags.emplace_back(seq, core);
  }
  const std::uint64_t edges = r.count(24);
  for (std::uint64_t i = 0; i < edges; ++i) {
    Seq a = r.u64();
    Seq b = r.u64();
    double w = r.f64();
    net.restore_edge(a, b, w);
  }
  std::vector<Engine::SlotRecord> slots;
  const std::uint64_t ns = r.count(4 + 8 + 8 + 8);
  for (std::uint64_t i = 0; i < ns; ++i) {
    Engine::SlotRecord s;
    s.slot = r.u32();
    s.id = r.u64();
    s.born_at = r.i64();
    const std::uint64_t nl = r.count(8);
    for (std::uint64_t k = 0; k < nl; ++k) s.lineage.push_back(r.u64());
    slots.push_back(std::move(s));
  }
  if (!r.done()) throw Error(ErrorCode::CorruptSnapshot, "trailing bytes");
  net.restore_counters(next_seq, now);
  loaded.engine->restore(slots, next_id);
  for (auto [seq, core] : flags) {
    if (net.node(seq).track.core != core) {
      throw Error(ErrorCode::CorruptSnapshot, "stored core flags disagree with the network");
    }
  }
  return loaded;
}

SnapshotInfo inspect_snapshot(std::string_view bytes) {
  SnapshotInfo info;
  LoadedSnapshot s = deserialize_snapshot(bytes);
  open_envelope(bytes, &info.version);
  info.now = s.engine->now();
  info.posts = s.engine->network().size();
  info.edges = s.engine->network().edge_count();
  info.clusters = s.engine->slot_records().size();
  info.config_json = config_to_json(s.config);
  return info;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_snapshot(const Engine& engine, const EngineConfig& config, const std::string& path) {
  const std::string bytes = serialize_snapshot(engine, config);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(ErrorCode::Io, "cannot rename " + tmp);
}

LoadedSnapshot load_snapshot(const std::string& path) { return deserialize_snapshot(read_file(path)); }

}  // namespace evtrack

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evtrack {

/// One stream unit: entity set, timestamp, author.
///
/// `entities` is sorted, deduplicated, lowercase and never contains an empty
/// string. `text` is the raw text when the record carried one; only the
/// hashtag peak baseline reads it.
struct Post {
  std::string id;
  std::vector<std::string> entities;
  std::int64_t timestamp = 0;
  std::string author;
  std::string text;

  friend bool operator==(const Post&, const Post&) = default;
};

struct RawRecord {
  std::optional<std::string> id;
  std::optional<std::int64_t> timestamp;
  std::string author;
  std::optional<std::vector<std::string>> entities;
  std::optional<std::string> text;
};

enum class EntityMode {
  PreferSupplied,   // use `entities` when present, else extract from `text`
  RequireSupplied,  // records without `entities` are malformed
};

/// Heuristic fallback extractor: lowercase, split on non-alphanumerics,
/// drop stopwords and 1-char tokens, strip simple plurals.
std::vector<std::string> extract_entities(std::string_view text);

bool is_stopword(std::string_view token);

Post parse_post(const RawRecord& record, EntityMode mode = EntityMode::PreferSupplied);

/// Decodes one JSON line. Throws Error(MalformedRecord) on bad JSON or
/// wrongly typed fields.
RawRecord parse_record_line(std::string_view line);

/// Reads line-delimited records, skipping and counting bad lines.
class PostReader {
 public:
  explicit PostReader(std::istream& in, EntityMode mode = EntityMode::PreferSupplied)
      : in_(in), mode_(mode) {}

  std::optional<Post> next();

  std::uint64_t lines_read() const { return lines_; }
  std::uint64_t skipped() const { return skipped_; }
  std::uint64_t dropped_empty() const { return dropped_empty_; }

 private:
  std::istream& in_;
  EntityMode mode_;
  std::uint64_t lines_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t dropped_empty_ = 0;
};

std::string post_to_json_line(const Post& post);

}  // namespace evtrack

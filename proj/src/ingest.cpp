#include "evtrack/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>

#include "evtrack/error.hpp"
#include "json.hpp"

namespace evtrack {
namespace {

constexpr auto kStopwords = std::to_array<std::string_view>({
    "a",        "about",    "above",   "after",   "again",   "against", "ain",
    "all",      "am",       "an",      "and",     "any",     "are",     "aren",
    "as",       "at",       "be",      "because", "been",    "before",  "being",
    "below",    "between",  "both",    "but",     "by",      "can",     "couldn",
    "d",        "did",      "didn",    "do",      "does",    "doesn",   "doing",
    "don",      "down",     "during",  "each",    "few",     "for",     "from",
    "further",  "had",      "hadn",    "has",     "hasn",    "have",    "haven",
    "having",   "he",       "her",     "here",    "hers",    "herself", "him",
    "himself",  "his",      "how",     "i",       "if",      "in",      "into",
    "is",       "isn",      "it",      "its",     "itself",  "just",    "ll",
    "m",        "ma",       "me",      "mightn",  "more",    "most",    "mustn",
    "my",       "myself",   "needn",   "no",      "nor",     "not",     "now",
    "o",        "of",       "off",     "on",      "once",    "only",    "or",
    "other",    "our",      "ours",    "ourselves", "out",   "over",    "own",
    "re",       "rt",       "s",       "same",    "shan",    "she",     "should",
    "shouldn",  "so",       "some",    "such",    "t",       "than",    "that",
    "the",      "their",    "theirs",  "them",    "themselves", "then", "there",
    "these",    "they",     "this",    "those",   "through", "to",      "too",
    "under",    "until",    "up",      "ve",      "very",    "was",     "wasn",
    "we",       "were",     "weren",   "what",    "when",    "where",   "which",
    "while",    "who",      "whom",    "why",     "will",    "with",    "won",
    "wouldn",   "y",        "you",     "your",    "yours",   "yourself", "yourselves",
    "http",     "https",    "www",     "com",     "co",      "amp",     "via",
    "get",      "got",      "also",    "could",   "would",   "may",     "might",
    "must",     "shall",    "us",      "let",     "lets",    "im",      "ive",
    "dont",     "cant",     "wont",    "isnt",    "yes",     "yet",     "one",
    "like",     "new",      "says",
});

constexpr auto kSortedStopwords = [] {
  auto words = kStopwords;
  std::sort(words.begin(), words.end());
  return words;
}();

bool is_token_char(unsigned char c) {
  // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept inside tokens.
  return std::isalnum(c) != 0 || c >= 0x80;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

void strip_plural(std::string& token) {
  if (token.size() > 3 && token.ends_with("ies")) {
    token.resize(token.size() - 3);
    token.push_back('y');
  } else if (token.size() > 3 && token.back() == 's') {
    token.pop_back();
  }
}

void normalize_set(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

bool is_stopword(std::string_view token) {
  return std::binary_search(kSortedStopwords.begin(), kSortedStopwords.end(), token);
}

std::vector<std::string> extract_entities(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) continue;
    std::string token = lower_ascii(text.substr(start, i - start));
    if (is_stopword(token)) continue;
    strip_plural(token);
    if (token.size() < 2 || is_stopword(token)) continue;
    out.push_back(std::move(token));
  }
  normalize_set(out);
  return out;
}

Post parse_post(const RawRecord& record, EntityMode mode) {
  if (!record.id) throw Error(ErrorCode::MalformedRecord, "missing id");
  if (!record.timestamp) throw Error(ErrorCode::MalformedRecord, "missing timestamp");
  if (*record.timestamp < 0) throw Error(ErrorCode::MalformedRecord, "negative timestamp");
  if (!record.entities && !record.text) {
    throw Error(ErrorCode::MalformedRecord, "record has neither entities nor text");
  }
  if (mode == EntityMode::RequireSupplied && !record.entities) {
    throw Error(ErrorCode::MalformedRecord, "entities required");
  }

  Post post;
  post.id = *record.id;
  post.timestamp = *record.timestamp;
  post.author = record.author;
  if (record.text) post.text = *record.text;

  if (record.entities) {
    for (const auto& e : *record.entities) {
      if (!e.empty()) post.entities.push_back(lower_ascii(e));
    }
    normalize_set(post.entities);
  } else {
    post.entities = extract_entities(*record.text);
  }
  if (post.entities.empty()) {
    throw Error(ErrorCode::EmptyEntitySet, "post " + post.id + " has no entities");
  }
  return post;
}

RawRecord parse_record_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "record is not an object");

  RawRecord r;
  if (auto it = j.find("id"); it != j.end()) {
    if (it->is_string()) {
      r.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      r.id = std::to_string(it->get<std::int64_t>());
    } else {
      throw Error(ErrorCode::MalformedRecord, "id must be a string or integer");
    }
  }
  if (auto it = j.find("timestamp"); it != j.end()) {
    if (!it->is_number_integer()) throw Error(ErrorCode::MalformedRecord, "timestamp must be an integer");
    r.timestamp = it->get<std::int64_t>();
  }
  if (auto it = j.find("author"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::MalformedRecord, "author must be a string");
    r.author = it->get<std::string>();
  }
  if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, "entities must be an array");
    std::vector<std::string> es;
    for (const auto& e : *it) {
      if (!e.is_string()) throw Error(ErrorCode::MalformedRecord, "entity must be a string");
      es.push_back(e.get<std::string>());
    }
    r.entities = std::move(es);
  }
  if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::MalformedRecord, "text must be a string");
    r.text = it->get<std::string>();
  }
  return r;
}

std::optional<Post> PostReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++lines_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return parse_post(parse_record_line(line), mode_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyEntitySet) {
        ++dropped_empty_;
      } else {
        ++skipped_;
      }
    }
  }
  return std::nullopt;
}

std::string post_to_json_line(const Post& post) {
  nlohmann::json j;
  j["id"] = post.id;
  j["timestamp"] = post.timestamp;
  j["author"] = post.author;
  j["entities"] = post.entities;
  if (!post.text.empty()) j["text"] = post.text;
  return j.dump();
}

}  // namespace evtrack

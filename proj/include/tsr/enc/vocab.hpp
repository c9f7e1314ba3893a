#ifndef TSR_ENC_VOCAB_HPP
#define TSR_ENC_VOCAB_HPP

#include <map>
#include <string>
#include <vector>

namespace tsr {

// Lowercases, then splits on whitespace and punctuation. Bytes outside ASCII
// pass through unchanged, so UTF-8 text stays intact.
std::vector<std::string> tokenize(const std::string& text);

// Closed vocabulary with two reserved ids: 0 = padding, 1 = unknown.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  Vocabulary();  // reserved entries only

  // Tokenizes every text and keeps the sorted set of distinct tokens.
  static Vocabulary build(const std::vector<std::string>& texts);

  // Token per line, line index = id; the first two lines must be the
  // reserved padding/unknown markers.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  int id(const std::string& token) const;  // kUnkId when absent
  const std::string& token(int id) const;

  // Token ids for a text. Unknown words raise DataError unless map_unknown
  // is set; mapped unknowns are appended to unknown_out when provided.
  std::vector<int> encode(const std::string& text, bool map_unknown = false,
                          std::vector<std::string>* unknown_out = nullptr) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

struct CaptionRecord {
  std::string shape_id;
  std::string text;
};

// Tab-separated `shape_id<TAB>caption`, one record per line, UTF-8.
std::vector<CaptionRecord> load_caption_file(const std::string& path);
void save_caption_file(const std::string& path, const std::vector<CaptionRecord>& records);

}  // namespace tsr

#endif  // TSR_ENC_VOCAB_HPP

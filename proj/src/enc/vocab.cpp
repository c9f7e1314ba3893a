#include "tsr/enc/vocab.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "tsr/common.hpp"

namespace tsr {

namespace {

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";

bool is_break(unsigned char c) { return std::isspace(c) != 0 || std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 128 && is_break(c)) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(c < 128 ? std::tolower(c) : c));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocabulary::Vocabulary() : tokens_{kPadToken, kUnkToken} {
  index_[kPadToken] = kPadId;
  index_[kUnkToken] = kUnkId;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> seen;
  for (const auto& text : texts)
    for (auto& tok : tokenize(text)) seen.insert(std::move(tok));
  seen.erase(kPadToken);
  seen.erase(kUnkToken);

  Vocabulary v;
  for (const auto& tok : seen) {
    v.index_[tok] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  if (lines.size() < 2 || lines[0] != kPadToken || lines[1] != kUnkToken)
    throw DataError("vocabulary file must start with the reserved " + std::string(kPadToken) +
                    " and " + kUnkToken + " lines: " + path);

  Vocabulary v;
  for (size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty())
      throw DataError("empty token at line " + std::to_string(i + 1) + " in " + path);
    if (v.index_.count(lines[i]))
      throw DataError("duplicate token '" + lines[i] + "' in " + path);
    v.index_[lines[i]] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(lines[i]);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (const auto& tok : tokens_) out << tok << '\n';
  if (!out) throw DataError("failed writing vocabulary file: " + path);
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                    std::to_string(size()));
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& text, bool map_unknown,
                                    std::vector<std::string>* unknown_out) const {
  auto words = tokenize(text);
  if (words.empty()) throw DataError("text has no tokens: \"" + text + "\"");
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    auto it = index_.find(w);
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else if (map_unknown) {
      ids.push_back(kUnkId);
      if (unknown_out) unknown_out->push_back(w);
    } else {
      throw DataError("token '" + w + "' not in the closed vocabulary");
    }
  }
  return ids;
}

std::vector<CaptionRecord> load_caption_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open caption file: " + path);

  std::vector<CaptionRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("caption line " + std::to_string(lineno) + " has no tab separator in " +
                      path);
    CaptionRecord rec{line.substr(0, tab), line.substr(tab + 1)};
    if (rec.shape_id.empty() || rec.text.empty())
      throw DataError("caption line " + std::to_string(lineno) + " has an empty field in " + path);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_caption_file(const std::string& path, const std::vector<CaptionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write caption file: " + path);
  for (const auto& rec : records) {
    if (rec.shape_id.empty() || rec.text.empty())
      throw DataError("caption record for '" + rec.shape_id + "' has an empty field");
    out << rec.shape_id << '\t' << rec.text << '\n';
  }
  if (!out) throw DataError("failed writing caption file: " + path);
}

}  // namespace tsr

#pragma once

// Corpus files (JSON): ontology, database, goals, dialogues and session logs.
// Every document carries {"format": "todsim-<kind>", "version": 1}. Encoding
// is canonical (sorted keys, two-space indent, trailing newline), so
// encode(decode(text)) == text for any canonically encoded input.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "todsim/domain.hpp"
#include "todsim/engine.hpp"
#include "todsim/errors.hpp"

namespace todsim {

struct CorpusBundle {
  Ontology ontology;
  VenueDatabase db;
  std::vector<Goal> goals;
  std::vector<AnnotatedDialogue> dialogues;
};

// A corpus document violates its schema. `path` is a JSON pointer into the
// document ("/goals/3/restaurant").
class CorpusError : public Error {
 public:
  CorpusError(std::string file, std::string path, std::string rule);
  const std::string& file() const { return file_; }
  const std::string& path() const { return path_; }
  const std::string& rule() const { return rule_; }

 private:
  std::string file_;
  std::string path_;
  std::string rule_;
};

inline constexpr int kCorpusFormatVersion = 1;

// Acts outside the closed set are mapped on load: recommend, select and
// offerbook to offer; offerbooked to book; nobook to nooffer; welcome to
// greet. Any other unknown act is dropped. Both count as warnings.
std::optional<ActType> map_foreign_act(std::string_view name);

struct DecodeResult {
  std::size_t warnings = 0;
  std::vector<std::string> messages;
};

std::string encode_ontology(const Ontology& ontology);
std::string encode_database(const VenueDatabase& db);
std::string encode_goals(std::span<const Goal> goals);
std::string encode_dialogues(std::span<const AnnotatedDialogue> dialogues);
std::string encode_sessions(std::span<const Session> sessions);

// `file` only labels errors. Goals and dialogues are validated against the
// ontology; goals in a goals file must name at least one domain.
Ontology decode_ontology(std::string_view text, const std::string& file = "ontology");
VenueDatabase decode_database(std::string_view text, const Ontology& ontology,
                              const std::string& file = "database");
std::vector<Goal> decode_goals(std::string_view text, const Ontology& ontology,
                               const std::string& file = "goals");
std::vector<AnnotatedDialogue> decode_dialogues(std::string_view text, const Ontology& ontology,
                                                DecodeResult* result = nullptr,
                                                const std::string& file = "dialogues");
std::vector<Session> decode_sessions(std::string_view text, const Ontology& ontology,
                                     DecodeResult* result = nullptr,
                                     const std::string& file = "sessions");

struct CorpusPaths {
  std::filesystem::path ontology;
  std::filesystem::path database;
  std::filesystem::path goals;
  std::optional<std::filesystem::path> dialogues;

  // <dir>/ontology.json, database.json, goals.json and, when present,
  // dialogues.json.
  static CorpusPaths in_directory(const std::filesystem::path& dir);
};

struct LoadedCorpus {
  CorpusBundle bundle;
  DecodeResult diagnostics;
};

// Throws CorpusError for unreadable files and schema violations.
LoadedCorpus load_corpus(const CorpusPaths& paths);
// "toy" loads the built-in corpus; anything else is a directory.
LoadedCorpus load_corpus(const std::string& name_or_dir);

void write_corpus(const CorpusBundle& bundle, const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace todsim

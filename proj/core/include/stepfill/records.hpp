#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stepfill/step_decomposer.hpp"

namespace stepfill {

/// One (question, solution) pair of a source corpus: `{"id", "question", "solution"}`.
struct CotRecord {
  std::string id;
  std::string question;
  std::string solution;
};

/// A decomposed record: `{"id", "question", "steps": [...]}`.
struct ChainRecord {
  std::string id;
  std::string question;
  StepChain chain;
};

/// Parsing throws Error{MalformedRecord} on bad JSON, missing keys or wrong types.
[[nodiscard]] CotRecord parse_cot_record(std::string_view line);
[[nodiscard]] ChainRecord parse_chain_record(std::string_view line);
[[nodiscard]] std::string to_jsonl(const ChainRecord& record);
[[nodiscard]] std::string to_jsonl(const CotRecord& record);

/// Calls fn(line, line_number) for every non-blank line. Throws Error{Io} if
/// the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

[[nodiscard]] std::vector<ChainRecord> read_chain_records(const std::filesystem::path& path);
[[nodiscard]] std::vector<CotRecord> read_cot_records(const std::filesystem::path& path);

/// Buffered JSONL writer; each line gets exactly one trailing '\n'.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void write(std::string_view line);
  void flush();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void write_text_file(const std::filesystem::path& path, std::string_view content);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

}  // namespace stepfill

#include "stepfill/records.hpp"

#include <fstream>
#include <memory>

#include <json.hpp>

#include "stepfill/error.hpp"
#include "json_util.hpp"

namespace stepfill {

using nlohmann::json;

namespace {

json parse_object(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedRecord, "line is not a JSON object");
  return j;
}

std::string get_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::MalformedRecord, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

// Non-string ids are accepted and rendered through their JSON text.
std::string get_id(const json& j) {
  const auto it = j.find("id");
  if (it == j.end()) throw Error(Errc::MalformedRecord, "missing field 'id'");
  return it->is_string() ? it->get<std::string>() : it->dump();
}

}  // namespace

CotRecord parse_cot_record(std::string_view line) {
  const json j = parse_object(line);
  return CotRecord{get_id(j), get_string(j, "question"), get_string(j, "solution")};
}

ChainRecord parse_chain_record(std::string_view line) {
  const json j = parse_object(line);
  const auto it = j.find("steps");
  if (it == j.end() || !it->is_array()) throw Error(Errc::MalformedRecord, "missing array field 'steps'");
  std::vector<std::string> steps;
  for (const auto& s : *it) {
    if (!s.is_string()) throw Error(Errc::MalformedRecord, "non-string entry in 'steps'");
    steps.push_back(s.get<std::string>());
  }
  return ChainRecord{get_id(j), get_string(j, "question"), StepChain::from_texts(std::move(steps))};
}

std::string to_jsonl(const ChainRecord& record) {
  json j;
  j["id"] = record.id;
  j["question"] = record.question;
  j["steps"] = record.chain.texts();
  return detail::dump(j);
}

std::string to_jsonl(const CotRecord& record) {
  json j;
  j["id"] = record.id;
  j["question"] = record.question;
  j["solution"] = record.solution;
  return detail::dump(j);
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    fn(line, number);
  }
  if (in.bad()) throw Error(Errc::Io, "read failure on " + path.string());
}

namespace {

template <class Record, class Parse>
std::vector<Record> read_records(const std::filesystem::path& path, Parse parse) {
  std::vector<Record> out;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace

std::vector<ChainRecord> read_chain_records(const std::filesystem::path& path) {
  return read_records<ChainRecord>(path, parse_chain_record);
}

std::vector<CotRecord> read_cot_records(const std::filesystem::path& path) {
  return read_records<CotRecord>(path, parse_cot_record);
}

struct JsonlWriter::Impl {
  std::ofstream out;
  std::string path;
};

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  impl_->path = path.string();
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw Error(Errc::Io, "cannot open " + impl_->path + " for writing");
}

JsonlWriter::~JsonlWriter() = default;

void JsonlWriter::write(std::string_view line) {
  impl_->out.write(line.data(), static_cast<std::streamsize>(line.size()));
  impl_->out.put('\n');
  if (!impl_->out) throw Error(Errc::Io, "write failure on " + impl_->path);
}

void JsonlWriter::flush() {
  impl_->out.flush();
  if (!impl_->out) throw Error(Errc::Io, "flush failure on " + impl_->path);
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::Io, "write failure on " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace stepfill

#include "combinterp/archive.hpp"

#include "combinterp/digest.hpp"
#include "combinterp/error.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;

std::vector<ArchiveRecord> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open archive '" + path.string() + "'");
  std::vector<ArchiveRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ArchiveRecord r{j.at("op").get<std::string>(), j.value("digest", std::string{}),
                      j.value("inputs", json::object()), j.at("output")};
      const std::string expected = call_digest(r.op, r.inputs);
      if (r.digest.empty()) r.digest = expected;
      if (r.digest != expected)
        throw LoadError(path.string() + ":" + std::to_string(line_no) +
                        ": digest does not match the recorded inputs");
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner,
                                   const std::filesystem::path& archive)
    : inner_(std::move(inner)) {
  if (archive.has_parent_path()) std::filesystem::create_directories(archive.parent_path());
  out_.open(archive, std::ios::trunc);
  if (!out_) throw ConfigError("cannot open record archive '" + archive.string() + "'");
}

json RecordingBackend::call(std::string_view op, const json& inputs, const CallContext& context) {
  json output = inner_->call(op, inputs, context);
  const std::string digest = call_digest(op, inputs);
  std::lock_guard lock(mutex_);
  if (written_.insert(digest).second) {
    json record = {{"op", op}, {"digest", digest}, {"inputs", inputs}, {"output", output}};
    out_ << canonical_dump(record) << '\n';
    out_.flush();
  }
  return output;
}

std::size_t RecordingBackend::recorded() const {
  std::lock_guard lock(mutex_);
  return written_.size();
}

ReplayBackend::ReplayBackend(const std::filesystem::path& archive) {
  for (auto& r : read_archive(archive)) by_digest_[r.digest] = std::move(r.output);
}

json ReplayBackend::call(std::string_view op, const json& inputs, const CallContext&) {
  const std::string digest = call_digest(op, inputs);
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end())
    throw FixtureMiss("replay miss: " + std::string(op) + " " + canonical_dump(inputs) +
                      " (digest " + digest + ")");
  return it->second;
}

}  // namespace combinterp

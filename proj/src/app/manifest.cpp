#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "pisa/app/commands.hpp"
#include "pisa/common/errors.hpp"

namespace pisa::app {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: digest init failed");
  std::array<char, 1 << 16> buf;
  while (f) {
    f.read(buf.data(), buf.size());
    if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 15]);
  }
  return out;
}

void update_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  const auto path = dir / "manifest.json";
  nlohmann::json m = {{"tool_version", kToolVersion}, {"files", nlohmann::json::object()}};
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      const auto old = nlohmann::json::parse(in);
      if (old.contains("files") && old["files"].is_object()) m["files"] = old["files"];
    } catch (const nlohmann::json::exception&) {
      // unreadable manifest: rebuilt from this command's files
    }
  }
  for (const auto& rel : files) {
    const auto p = dir / rel;
    m["files"][rel] = {{"bytes", std::filesystem::file_size(p)}, {"sha256", sha256_file(p)}};
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << m.dump(2) << '\n';
}

}  // namespace pisa::app

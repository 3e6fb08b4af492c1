#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace corder::detail {

struct EmbeddedFile {
  const char* path;
  const char* content;
};

extern const EmbeddedFile kEmbeddedFiles[];
extern const std::size_t kEmbeddedFileCount;

std::optional<std::string_view> embedded_file(std::string_view path);

}  // namespace corder::detail

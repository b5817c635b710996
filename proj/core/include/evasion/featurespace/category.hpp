#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evasion {

/// DREBIN feature categories. S1..S4 come from the manifest, S5..S8 from
/// disassembled code.
enum class Category : std::uint8_t { S1 = 0, S2, S3, S4, S5, S6, S7, S8 };

inline constexpr std::size_t kNumCategories = 8;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::S1, Category::S2, Category::S3, Category::S4,
    Category::S5, Category::S6, Category::S7, Category::S8};

inline constexpr bool is_manifest_derived(Category c) noexcept {
  return static_cast<std::uint8_t>(c) < 4;
}

inline constexpr std::size_t index_of(Category c) noexcept {
  return static_cast<std::size_t>(c);
}

/// "S1".."S8".
std::string_view category_code(Category c) noexcept;
std::optional<Category> category_from_code(std::string_view code) noexcept;

/// Human-readable name ("hardware components", "requested permissions", ...).
std::string_view category_description(Category c) noexcept;

/// Maps a feature-file line prefix (text before `::`) to its category.
std::optional<Category> category_from_prefix(std::string_view prefix) noexcept;

/// Canonical prefix written when serializing a feature of category c.
std::string_view canonical_prefix(Category c) noexcept;

}  // namespace evasion

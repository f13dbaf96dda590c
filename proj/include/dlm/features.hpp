#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace dlm {

inline constexpr std::size_t kNumFeatures = 43;
/// Indices below this are sensitive and always zero / hidden from prompts.
inline constexpr std::size_t kFirstVisibleFeature = 7;

/// Display name of each visible feature, as listed to the language model.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "", "", "", "", "", "", "",
    "Ages 10-20",
    "Ages 21-30",
    "Ages 31-40",
    "Ages 41-50",
    "Ages 51-60",
    "Speaks Hindi",
    "Speaks Marathi",
    "Speaks Gujurati",
    "Speaks Kannada",
    "Education level 1/7 -- illiterate",
    "Education level 2/7 -- 1-5th Grade Completed",
    "Education level 3/7 -- 6-9th Grade Completed",
    "Education level 4/7 -- 10th Grade Passed",
    "Education level 5/7 -- 12th Grade Passed",
    "Education level 6/7 -- Graduate",
    "Education level 7/7 -- Post graduate",
    "Phone owner 0 (e.g., woman)",
    "Phone owner 1 (e.g., husband)",
    "Phone owner 2 (e.g., family)",
    "To be called from 8:30am-10:30am",
    "To be called from 10:30am-12:30pm",
    "To be called from 12:30pm-3:30pm",
    "To be called from 3:30pm-5:30pm",
    "To be called from 5:30pm-7:30pm",
    "To be called from 7:30pm-9:30pm",
    "NGO",
    "ARMMAN",
    "PHC",
    "Income bracket -1 (no income)",
    "Income bracket 1 (e.g., 0-5000)",
    "Income bracket 2 (e.g., 5001-10000)",
    "Income bracket 3 (e.g., 10001-15000)",
    "Income bracket 4 (e.g., 15001-20000)",
    "Income bracket 5 (e.g., 20001-25000)",
    "Income bracket 6 (e.g., 25001-30000)",
    "Income bracket 7 (e.g., 30000-999999)",
};

/// Label used for a feature inside an outcome report (shorter than the
/// catalog name for some categories).
inline constexpr std::array<std::string_view, kNumFeatures> kOutcomeLabels = {
    "", "", "", "", "", "", "",
    "Ages 10-20",
    "Ages 21-30",
    "Ages 31-40",
    "Ages 41-50",
    "Ages 51-60",
    "Speaks Hindi",
    "Speaks Marathi",
    "Speaks Gujurati",
    "Speaks Kannada",
    "Illiterate",
    "1-5th Grade Completed",
    "6-9th Grade Completed",
    "10th Grade Passed",
    "12th Grade Passed",
    "Graduate",
    "Post graduate",
    "Phone owner - Woman",
    "Phone owner - Husband",
    "Phone owner - Family",
    "8:30am-10:30am",
    "10:30am-12:30pm",
    "12:30pm-3:30pm",
    "3:30pm-5:30pm",
    "5:30pm-7:30pm",
    "7:30pm-9:30pm",
    "NGO",
    "ARMMAN",
    "PHC",
    "Income bracket -1 (no income)",
    "Income bracket 1 (e.g., 0-5000)",
    "Income bracket 2 (e.g., 5001-10000)",
    "Income bracket 3 (e.g., 10001-15000)",
    "Income bracket 4 (e.g., 15001-20000)",
    "Income bracket 5 (e.g., 20001-25000)",
    "Income bracket 6 (e.g., 25001-30000)",
    "Income bracket 7 (e.g., 30000-999999)",
};

enum class Category : std::size_t {
  kAges,
  kLanguages,
  kEducation,
  kPhoneOwner,
  kCallTime,
  kOrganization,
  kIncome,
};

inline constexpr std::size_t kNumCategories = 7;

/// Contiguous one-hot block [first, last] of feature indices.
struct CategoryBlock {
  Category category;
  std::string_view title;
  std::size_t first;
  std::size_t last;

  constexpr std::size_t size() const { return last - first + 1; }
  constexpr bool contains(std::size_t index) const { return index >= first && index <= last; }
};

/// Blocks in feature-index order.
inline constexpr std::array<CategoryBlock, kNumCategories> kCategoryBlocks = {{
    {Category::kAges, "Ages", 7, 11},
    {Category::kLanguages, "Languages Spoken", 12, 15},
    {Category::kEducation, "Education Levels", 16, 22},
    {Category::kPhoneOwner, "Phone Owners", 23, 25},
    {Category::kCallTime, "Calling Times", 26, 31},
    {Category::kOrganization, "Organizations", 32, 34},
    {Category::kIncome, "Income", 35, 42},
}};

/// Section order used when rendering outcome reports.
inline constexpr std::array<Category, kNumCategories> kReportOrder = {
    Category::kAges,     Category::kIncome,     Category::kCallTime,     Category::kEducation,
    Category::kLanguages, Category::kPhoneOwner, Category::kOrganization,
};

constexpr const CategoryBlock& block_of(Category c) {
  return kCategoryBlocks[static_cast<std::size_t>(c)];
}

}  // namespace dlm

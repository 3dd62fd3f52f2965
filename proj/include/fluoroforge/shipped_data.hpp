#pragma once

#include <string_view>

namespace fluoroforge {

// JSON documents compiled into the library from data/ and plans/.
std::string_view shipped_catalog_json();
std::string_view shipped_views_json();
std::string_view shipped_templates_json();
std::string_view shipped_plan_json();

}  // namespace fluoroforge

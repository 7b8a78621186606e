#pragma once

#include <string_view>

namespace broccoli::bundled {

std::string_view stoplist_text();
std::string_view irregular_forms_text();
std::string_view e_stems_text();

}  // namespace broccoli::bundled

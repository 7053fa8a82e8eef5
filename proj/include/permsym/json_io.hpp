#ifndef PERMSYM_JSON_IO_HPP
#define PERMSYM_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include "permsym/dense_array.hpp"
#include "permsym/mlp.hpp"
#include "permsym/perm.hpp"
#include "permsym/symtest.hpp"

namespace permsym {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

/// Serializer with floats rendered at 17 significant digits (lossless for
/// 64-bit floats); parse(dump(x)) == x including every float bit.
std::string dump_json(const Json& j, int indent = -1);

/// Arrays travel as nested row-major lists.
Json array_to_json(const DenseArray& x);
DenseArray array_from_json(const Json& j);

/// Permutations travel as 0-based image vectors.
Json perm_to_json(const Permutation& p);
Permutation perm_from_json(const Json& j);
Json tuple_to_json(const PermTuple& t);
PermTuple tuple_from_json(const Json& j);

Json report_to_json(const TestReport& r);
TestReport report_from_json(const Json& j);

Json mlp_to_json(const MlpParams& p);
MlpParams mlp_from_json(const Json& j);

/// Throws std::invalid_argument naming any unknown key.
void reject_unknown_keys(const Json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where);

/// Validates "schema_version" == "1".
void check_schema_version(const Json& obj, const std::string& where);

}  // namespace permsym

#endif

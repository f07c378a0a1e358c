#pragma once

#include <string>

#include <json.hpp>

#include "taskweave/tir.hpp"

namespace taskweave::tir {

nlohmann::json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IndexExpr& e);
IndexExpr index_expr_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BufferSlice& s);
BufferSlice slice_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TirProgram& p);
TirProgram program_from_json(const nlohmann::json& j);

std::string program_hash(const TirProgram& p);

void save_program(const TirProgram& p, const std::string& path);
TirProgram load_program(const std::string& path);

}  // namespace taskweave::tir

// envmend/envmend.hpp - umbrella include
#pragma once

#include "envmend/backends.hpp"
#include "envmend/bench.hpp"
#include "envmend/build_validator.hpp"
#include "envmend/candidate_builder.hpp"
#include "envmend/core_types.hpp"
#include "envmend/dockerfile_emitter.hpp"
#include "envmend/error_triage.hpp"
#include "envmend/errors.hpp"
#include "envmend/llm_gateway.hpp"
#include "envmend/prompts.hpp"
#include "envmend/registry_http.hpp"
#include "envmend/registry_retriever.hpp"
#include "envmend/repair_loop.hpp"
#include "envmend/source_inspector.hpp"
#include "envmend/version.hpp"

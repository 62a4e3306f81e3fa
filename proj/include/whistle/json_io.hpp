#pragma once

#include <json.hpp>

#include "whistle/config.hpp"
#include "whistle/pipeline.hpp"

namespace whistle {

using Json = nlohmann::json;

void to_json(Json& j, const StftConfig& c);
void from_json(const Json& j, StftConfig& c);
void to_json(Json& j, const FrangiConfig& c);
void from_json(const Json& j, FrangiConfig& c);
void to_json(Json& j, const HoughConfig& c);
void from_json(const Json& j, HoughConfig& c);
void to_json(Json& j, const SnakeConfig& c);
void from_json(const Json& j, SnakeConfig& c);
void to_json(Json& j, const FeatureConfig& c);
void from_json(const Json& j, FeatureConfig& c);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);
void to_json(Json& j, const PipelineConfig& c);
void from_json(const Json& j, PipelineConfig& c);

void to_json(Json& j, const LineSegment& s);
void from_json(const Json& j, LineSegment& s);
void to_json(Json& j, const Snake& s);
void from_json(const Json& j, Snake& s);
void to_json(Json& j, const FeatureVector& v);
void from_json(const Json& j, FeatureVector& v);
void to_json(Json& j, const DatasetMeta& m);
void from_json(const Json& j, DatasetMeta& m);
void to_json(Json& j, const DetectionRecord& r);
void from_json(const Json& j, DetectionRecord& r);
void to_json(Json& j, const SnippetInfo& s);
void from_json(const Json& j, SnippetInfo& s);

void to_json(Json& j, const RandomForestModel& m);
void from_json(const Json& j, RandomForestModel& m);
void to_json(Json& j, const ModelFile& m);
void from_json(const Json& j, ModelFile& m);

Json report_to_json(const EvaluationReport& report, const GridSearchResult* grid = nullptr);

}  // namespace whistle

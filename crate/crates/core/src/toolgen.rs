//! Emits function-calling tool definitions and the structured-output schema
//! from a use case, and parses tool-call payloads back into [`QueryRequest`]
//! values across all tool modes.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::query::QueryRequest;
use crate::schema::{self, SchemaError, UseCase};

pub const UNIFIED_TOOL_NAME: &str = "query_database";
pub const PER_COLLECTION_PREFIX: &str = "query_";
pub const RATIONALE_PARAMETER: &str = "rationale";

const DESCRIPTION_PREAMBLE: &str = "Query a database with an optional search query or optional \
filters or aggregations on the results.\n\nIMPORTANT! Please be mindful of the available query \
APIs you can use such as search queries, filters, aggregations, and groupby!\n\nAvailable \
collections in this database:\n";

/// A provider-neutral tool definition. `parameters` holds the ordered
/// parameter-schema tree; serializers in the harness wrap it in the
/// provider's envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDefinition {
    pub name: String,
    pub description: String,
    pub parameters: Value,
    pub required: Vec<String>,
}

impl ToolDefinition {
    /// Serializes into the reference envelope:
    /// `{"type": "function", "function": {...}}`.
    pub fn to_reference_envelope(&self) -> Value {
        json!({
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": self.parameters,
                    "required": self.required,
                }
            }
        })
    }

    pub fn has_parameter(&self, name: &str) -> bool {
        self.parameters.as_object().is_some_and(|m| m.contains_key(name))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ToolError {
    #[error("parameter '{0}' already present")]
    AlreadyPresent(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Error)]
pub enum ToolParseError {
    #[error("unknown tool '{0}'")]
    UnknownTool(String),
    #[error("malformed tool arguments: {0}")]
    BadArguments(String),
    #[error("structured payload violates its schema: {0}")]
    SchemaInvariant(String),
}

fn filter_parameters() -> Value {
    json!({
        "integer_property_filter": {
            "type": "object",
            "description": "Filter numeric properties using comparison operators.",
            "properties": {
                "property_name": { "type": "string" },
                "operator": { "type": "string", "enum": ["=", "<", ">", "<=", ">="] },
                "value": { "type": "number" }
            }
        },
        "text_property_filter": {
            "type": "object",
            "description": "Filter text properties using equality or LIKE operators",
            "properties": {
                "property_name": { "type": "string" },
                "operator": { "type": "string", "enum": ["=", "LIKE"] },
                "value": { "type": "string" }
            }
        },
        "boolean_property_filter": {
            "type": "object",
            "description": "Filter boolean properties using equality operators",
            "properties": {
                "property_name": { "type": "string" },
                "operator": { "type": "string", "enum": ["=", "!="] },
                "value": { "type": "boolean" }
            }
        }
    })
}

fn aggregation_parameters() -> Value {
    json!({
        "integer_property_aggregation": {
            "type": "object",
            "description": "Aggregate numeric properties using statistical functions",
            "properties": {
                "property_name": { "type": "string" },
                "metrics": {
                    "type": "string",
                    "enum": ["COUNT", "TYPE", "MIN", "MAX", "MEAN", "MEDIAN", "MODE", "SUM"]
                }
            }
        },
        "text_property_aggregation": {
            "type": "object",
            "description": "Aggregate text properties using frequency analysis",
            "properties": {
                "property_name": { "type": "string" },
                "metrics": {
                    "type": "string",
                    "enum": ["COUNT", "TYPE", "TOP_OCCURRENCES"]
                },
                "top_occurrences_limit": { "type": "integer" }
            }
        },
        "boolean_property_aggregation": {
            "type": "object",
            "description": "Aggregate boolean properties using statistical functions",
            "properties": {
                "property_name": { "type": "string" },
                "metrics": {
                    "type": "string",
                    "enum": [
                        "COUNT",
                        "TYPE",
                        "TOTAL_TRUE",
                        "TOTAL_FALSE",
                        "PERCENTAGE_TRUE",
                        "PERCENTAGE_FALSE"
                    ]
                }
            }
        }
    })
}

fn extend(map: &mut Map<String, Value>, block: Value) {
    if let Value::Object(entries) = block {
        map.extend(entries);
    }
}

/// The nine-parameter tree of the unified tool, in declaration order.
fn unified_parameters(collections: &[String]) -> Value {
    let mut params = Map::new();
    extend(
        &mut params,
        json!({
            "collection_name": {
                "type": "string",
                "description": "The collection to query.",
                "enum": collections,
            },
            "search_query": {
                "type": "string",
                "description": "A search query to return objects from a search index."
            }
        }),
    );
    extend(&mut params, filter_parameters());
    extend(&mut params, aggregation_parameters());
    extend(
        &mut params,
        json!({
            "groupby_property": {
                "type": "string",
                "description": "Group the results by a property."
            }
        }),
    );
    Value::Object(params)
}

fn description_for(collections_description: &str) -> String {
    format!("{DESCRIPTION_PREAMBLE}{collections_description}")
}

/// Builds the single `query_database` tool whose `collection_name` enum
/// routes across every collection of the use case.
pub fn build_unified_tool(use_case: &UseCase, budget: usize) -> Result<ToolDefinition, ToolError> {
    let preamble_tokens = schema::CharEstimator.estimate(DESCRIPTION_PREAMBLE);
    let body_budget = budget.saturating_sub(preamble_tokens).max(schema::MIN_TOKEN_BUDGET);
    let body = schema::render_description(use_case, body_budget)?;
    Ok(ToolDefinition {
        name: UNIFIED_TOOL_NAME.to_string(),
        description: description_for(&body),
        parameters: unified_parameters(&schema::collection_names(use_case)),
        required: vec!["collection_name".to_string()],
    })
}

/// Builds one tool per collection. Tool identity encodes the routing, so the
/// `collection_name` parameter is omitted entirely.
pub fn build_per_collection_tools(
    use_case: &UseCase,
    budget: usize,
) -> Result<Vec<ToolDefinition>, ToolError> {
    let preamble_tokens = schema::CharEstimator.estimate(DESCRIPTION_PREAMBLE);
    let body_budget = budget.saturating_sub(preamble_tokens).max(schema::MIN_TOKEN_BUDGET);
    use_case
        .collections
        .iter()
        .map(|collection| {
            let body = schema::render_collections(
                std::slice::from_ref(collection),
                Some(&use_case.use_case_overview),
                true,
            );
            let body = fit_single_collection(collection, &use_case.use_case_overview, body, body_budget)?;
            let mut params = Map::new();
            extend(
                &mut params,
                json!({
                    "search_query": {
                        "type": "string",
                        "description": "A search query to return objects from a search index."
                    }
                }),
            );
            extend(&mut params, filter_parameters());
            extend(&mut params, aggregation_parameters());
            extend(
                &mut params,
                json!({
                    "groupby_property": {
                        "type": "string",
                        "description": "Group the results by a property."
                    }
                }),
            );
            Ok(ToolDefinition {
                name: format!("{PER_COLLECTION_PREFIX}{}", collection.name),
                description: description_for(&body),
                parameters: Value::Object(params),
                required: Vec::new(),
            })
        })
        .collect()
}

fn fit_single_collection(
    collection: &crate::schema::CollectionSchema,
    overview: &str,
    full: String,
    budget: usize,
) -> Result<String, ToolError> {
    let estimator = schema::CharEstimator;
    use schema::TokenEstimator;
    if estimator.estimate(&full) <= budget {
        return Ok(full);
    }
    for (with_desc, with_overview) in [(false, true), (false, false)] {
        let text = schema::render_collections(
            std::slice::from_ref(collection),
            if with_overview { Some(overview) } else { None },
            with_desc,
        );
        let estimate = estimator.estimate(&text);
        if estimate <= budget {
            return Ok(text);
        }
        if !with_overview {
            return Err(ToolError::Schema(SchemaError::BudgetExceeded {
                estimated: estimate,
                budget,
            }));
        }
    }
    unreachable!("truncation tiers are exhaustive")
}

/// Adds a required string-valued `rationale` parameter to a tool.
pub fn with_rationale(tool: &ToolDefinition) -> Result<ToolDefinition, ToolError> {
    if tool.has_parameter(RATIONALE_PARAMETER) {
        return Err(ToolError::AlreadyPresent(RATIONALE_PARAMETER.to_string()));
    }
    let mut out = tool.clone();
    if let Value::Object(params) = &mut out.parameters {
        params.insert(
            RATIONALE_PARAMETER.to_string(),
            json!({
                "type": "string",
                "description": "A rationale for why this query answers the command."
            }),
        );
    }
    out.required.push(RATIONALE_PARAMETER.to_string());
    Ok(out)
}

/// The constrained-output form: either a direct response or tool calls,
/// with an optional rationale about the decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseOrToolCall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_rationale: Option<String>,
    pub use_tools: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_calls: Option<Vec<ToolCallPayload>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallPayload {
    pub function_name: String,
    pub arguments: Value,
}

impl ResponseOrToolCall {
    pub fn check_invariants(&self) -> Result<(), ToolParseError> {
        if self.use_tools {
            match &self.tool_calls {
                Some(calls) if !calls.is_empty() => Ok(()),
                _ => Err(ToolParseError::SchemaInvariant(
                    "use_tools is true but tool_calls is empty".into(),
                )),
            }
        } else if self.response.is_none() {
            Err(ToolParseError::SchemaInvariant(
                "use_tools is false but response is absent".into(),
            ))
        } else {
            Ok(())
        }
    }
}

/// Emits the JSON schema constraining model output to [`ResponseOrToolCall`],
/// with the unified tool parameters as the arguments sub-schema.
pub fn build_structured_output_schema(use_case: &UseCase) -> Value {
    json!({
        "type": "object",
        "properties": {
            "tool_rationale": {
                "type": "string",
                "description": "A rationale regarding whether tool calls are needed."
            },
            "use_tools": { "type": "boolean" },
            "response": { "type": "string" },
            "tool_calls": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "function_name": { "type": "string" },
                        "arguments": {
                            "type": "object",
                            "properties": unified_parameters(&schema::collection_names(use_case)),
                            "required": ["collection_name"]
                        }
                    },
                    "required": ["function_name", "arguments"]
                }
            }
        },
        "required": ["use_tools"]
    })
}

/// A tool call parsed back into the unified query space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCall {
    pub query: QueryRequest,
    pub rationale: Option<String>,
}

/// Parses unified-tool arguments. A `rationale` argument, when present, is
/// captured separately rather than folded into the query.
pub fn parse_unified_arguments(arguments: &Value) -> Result<ParsedCall, ToolParseError> {
    let mut object = arguments
        .as_object()
        .ok_or_else(|| ToolParseError::BadArguments("arguments must be an object".into()))?
        .clone();
    let rationale = object
        .remove(RATIONALE_PARAMETER)
        .and_then(|v| v.as_str().map(str::to_string));
    let query: QueryRequest = serde_json::from_value(Value::Object(object))
        .map_err(|e| ToolParseError::BadArguments(e.to_string()))?;
    Ok(ParsedCall { query, rationale })
}

/// Parses a tool call in any native mode: the unified tool by name, or a
/// per-collection tool whose identity supplies the collection routing.
pub fn parse_tool_call(
    tool_name: &str,
    arguments: &Value,
    use_case: &UseCase,
) -> Result<ParsedCall, ToolParseError> {
    if tool_name == UNIFIED_TOOL_NAME {
        return parse_unified_arguments(arguments);
    }
    if let Some(collection) = tool_name.strip_prefix(PER_COLLECTION_PREFIX) {
        if use_case.collection(collection).is_some() {
            let mut parsed = parse_unified_arguments(arguments)?;
            // Tool identity wins over any stray collection_name argument.
            parsed.query.collection_name = collection.to_string();
            return Ok(parsed);
        }
    }
    Err(ToolParseError::UnknownTool(tool_name.to_string()))
}

/// Outcome of parsing a structured-generation payload.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuredOutcome {
    Response { text: String, tool_rationale: Option<String> },
    ToolCalls { calls: Vec<ParsedCall>, tool_rationale: Option<String> },
}

/// Parses a structured-generation payload, enforcing the schema invariants
/// and resolving each embedded call exactly as the native path would.
pub fn parse_structured_payload(
    content: &str,
    use_case: &UseCase,
) -> Result<StructuredOutcome, ToolParseError> {
    let payload: ResponseOrToolCall = serde_json::from_str(content)
        .map_err(|e| ToolParseError::BadArguments(e.to_string()))?;
    payload.check_invariants()?;
    if payload.use_tools {
        let calls = payload
            .tool_calls
            .unwrap_or_default()
            .iter()
            .map(|call| parse_tool_call(&call.function_name, &call.arguments, use_case))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StructuredOutcome::ToolCalls { calls, tool_rationale: payload.tool_rationale })
    } else {
        Ok(StructuredOutcome::Response {
            text: payload.response.unwrap_or_default(),
            tool_rationale: payload.tool_rationale,
        })
    }
}

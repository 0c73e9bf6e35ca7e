//! The unified query representation: the tool's argument space, validation
//! against a use case, canonicalization for comparison, complexity
//! classification, and the operator-combination signature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{CollectionSchema, PropertyType, UseCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComparisonOperator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl ComparisonOperator {
    pub const ALL: [ComparisonOperator; 5] = [
        ComparisonOperator::Eq,
        ComparisonOperator::Lt,
        ComparisonOperator::Gt,
        ComparisonOperator::Le,
        ComparisonOperator::Ge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ComparisonOperator::Eq => "=",
            ComparisonOperator::Lt => "<",
            ComparisonOperator::Gt => ">",
            ComparisonOperator::Le => "<=",
            ComparisonOperator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TextOperator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "LIKE")]
    Like,
}

impl TextOperator {
    pub const ALL: [TextOperator; 2] = [TextOperator::Eq, TextOperator::Like];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BooleanOperator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl BooleanOperator {
    pub const ALL: [BooleanOperator; 2] = [BooleanOperator::Eq, BooleanOperator::Ne];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NumericMetric {
    Count,
    Type,
    Min,
    Max,
    Mean,
    Median,
    Mode,
    Sum,
}

impl NumericMetric {
    pub const ALL: [NumericMetric; 8] = [
        NumericMetric::Count,
        NumericMetric::Type,
        NumericMetric::Min,
        NumericMetric::Max,
        NumericMetric::Mean,
        NumericMetric::Median,
        NumericMetric::Mode,
        NumericMetric::Sum,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TextMetric {
    Count,
    Type,
    TopOccurrences,
}

impl TextMetric {
    pub const ALL: [TextMetric; 3] = [TextMetric::Count, TextMetric::Type, TextMetric::TopOccurrences];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BooleanMetric {
    Count,
    Type,
    TotalTrue,
    TotalFalse,
    PercentageTrue,
    PercentageFalse,
}

impl BooleanMetric {
    pub const ALL: [BooleanMetric; 6] = [
        BooleanMetric::Count,
        BooleanMetric::Type,
        BooleanMetric::TotalTrue,
        BooleanMetric::TotalFalse,
        BooleanMetric::PercentageTrue,
        BooleanMetric::PercentageFalse,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntPropertyFilter {
    pub property_name: String,
    pub operator: ComparisonOperator,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPropertyFilter {
    pub property_name: String,
    pub operator: TextOperator,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooleanPropertyFilter {
    pub property_name: String,
    pub operator: BooleanOperator,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntAggregation {
    pub property_name: String,
    #[serde(rename = "metrics")]
    pub metric: NumericMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextAggregation {
    pub property_name: String,
    #[serde(rename = "metrics")]
    pub metric: TextMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_occurrences_limit: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooleanAggregation {
    pub property_name: String,
    #[serde(rename = "metrics")]
    pub metric: BooleanMetric,
}

/// The unified query: `collection_name` is the only required argument.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryRequest {
    pub collection_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integer_property_filter: Option<IntPropertyFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_property_filter: Option<TextPropertyFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boolean_property_filter: Option<BooleanPropertyFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integer_property_aggregation: Option<IntAggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_property_aggregation: Option<TextAggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boolean_property_aggregation: Option<BooleanAggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groupby_property: Option<String>,
}

impl QueryRequest {
    pub fn new(collection_name: impl Into<String>) -> Self {
        Self { collection_name: collection_name.into(), ..Self::default() }
    }

    /// Number of optional operator arguments present. `collection_name` is
    /// excluded: a one-argument query is the simplest expressible.
    pub fn optional_argument_count(&self) -> usize {
        usize::from(self.search_query.is_some())
            + usize::from(self.integer_property_filter.is_some())
            + usize::from(self.text_property_filter.is_some())
            + usize::from(self.boolean_property_filter.is_some())
            + usize::from(self.integer_property_aggregation.is_some())
            + usize::from(self.text_property_aggregation.is_some())
            + usize::from(self.boolean_property_aggregation.is_some())
            + usize::from(self.groupby_property.is_some())
    }

    pub fn filter_slot_count(&self) -> usize {
        usize::from(self.integer_property_filter.is_some())
            + usize::from(self.text_property_filter.is_some())
            + usize::from(self.boolean_property_filter.is_some())
    }

    pub fn aggregation_slot_count(&self) -> usize {
        usize::from(self.integer_property_aggregation.is_some())
            + usize::from(self.text_property_aggregation.is_some())
            + usize::from(self.boolean_property_aggregation.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ComplexityBucket {
    Simple,
    Moderate,
    Complex,
}

impl std::fmt::Display for ComplexityBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ComplexityBucket::Simple => "SIMPLE",
            ComplexityBucket::Moderate => "MODERATE",
            ComplexityBucket::Complex => "COMPLEX",
        };
        f.write_str(s)
    }
}

/// Which kind occupies the filter or aggregation slot of a combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    None,
    Int,
    Text,
    Bool,
}

impl SlotKind {
    pub const ALL: [SlotKind; 4] = [SlotKind::None, SlotKind::Int, SlotKind::Text, SlotKind::Bool];

    pub fn is_present(&self) -> bool {
        *self != SlotKind::None
    }
}

/// The 4-tuple identifying one operator combination: search presence,
/// filter kind, aggregation kind, groupby presence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CombinationId {
    pub search: bool,
    pub filter: SlotKind,
    pub aggregation: SlotKind,
    pub groupby: bool,
}

impl CombinationId {
    pub fn active_argument_count(&self) -> usize {
        usize::from(self.search)
            + usize::from(self.filter.is_present())
            + usize::from(self.aggregation.is_present())
            + usize::from(self.groupby)
    }

    pub fn is_empty(&self) -> bool {
        self.active_argument_count() == 0
    }
}

impl std::fmt::Display for CombinationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = |k: SlotKind| match k {
            SlotKind::None => "none",
            SlotKind::Int => "int",
            SlotKind::Text => "text",
            SlotKind::Bool => "bool",
        };
        write!(
            f,
            "({},{},{},{})",
            u8::from(self.search),
            kind(self.filter),
            kind(self.aggregation),
            u8::from(self.groupby)
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QueryModelError {
    #[error("query carries no optional operator arguments")]
    DegenerateQuery,
    #[error("query carries more than one filter slot")]
    MultipleFiltersPresent,
    #[error("query carries more than one aggregation slot")]
    MultipleAggregationsPresent,
}

#[derive(Debug, Error, PartialEq, Clone, Serialize, Deserialize)]
pub enum ValidationError {
    #[error("unknown collection '{0}'")]
    UnknownCollection(String),
    #[error("unknown property '{property}' on collection '{collection}'")]
    UnknownProperty { collection: String, property: String },
    #[error("property '{property}' has type {actual}, expected {expected}")]
    TypeMismatch {
        property: String,
        expected: PropertyType,
        actual: PropertyType,
    },
    #[error("top_occurrences_limit on '{property}' requires the TOP_OCCURRENCES metric")]
    StrayTopOccurrencesLimit { property: String },
    #[error("top_occurrences_limit on '{property}' must be positive")]
    NonPositiveLimit { property: String },
}

/// A query proven consistent with its use case: the collection exists and
/// every referenced property exists with the right type.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedQuery {
    query: QueryRequest,
    collection: CollectionSchema,
}

impl ValidatedQuery {
    pub fn query(&self) -> &QueryRequest {
        &self.query
    }

    pub fn collection(&self) -> &CollectionSchema {
        &self.collection
    }

    pub fn into_query(self) -> QueryRequest {
        self.query
    }
}

/// Validates a query against a use case, collecting every error rather than
/// stopping at the first.
pub fn validate(query: &QueryRequest, use_case: &UseCase) -> Result<ValidatedQuery, Vec<ValidationError>> {
    let mut errors = Vec::new();
    let collection = match use_case.collection(&query.collection_name) {
        Some(c) => c,
        None => {
            return Err(vec![ValidationError::UnknownCollection(query.collection_name.clone())]);
        }
    };

    let mut check_property = |name: &str, expected: Option<PropertyType>| {
        match collection.property(name) {
            None => errors.push(ValidationError::UnknownProperty {
                collection: collection.name.clone(),
                property: name.to_string(),
            }),
            Some(prop) => {
                if let Some(expected) = expected {
                    if prop.data_type != expected {
                        errors.push(ValidationError::TypeMismatch {
                            property: name.to_string(),
                            expected,
                            actual: prop.data_type,
                        });
                    }
                }
            }
        }
    };

    if let Some(f) = &query.integer_property_filter {
        check_property(&f.property_name, Some(PropertyType::Number));
    }
    if let Some(f) = &query.text_property_filter {
        check_property(&f.property_name, Some(PropertyType::Text));
    }
    if let Some(f) = &query.boolean_property_filter {
        check_property(&f.property_name, Some(PropertyType::Boolean));
    }
    if let Some(a) = &query.integer_property_aggregation {
        check_property(&a.property_name, Some(PropertyType::Number));
    }
    if let Some(a) = &query.text_property_aggregation {
        check_property(&a.property_name, Some(PropertyType::Text));
        if let Some(limit) = a.top_occurrences_limit {
            if a.metric != TextMetric::TopOccurrences {
                errors.push(ValidationError::StrayTopOccurrencesLimit {
                    property: a.property_name.clone(),
                });
            }
            if limit == 0 {
                errors.push(ValidationError::NonPositiveLimit {
                    property: a.property_name.clone(),
                });
            }
        }
    }
    if let Some(a) = &query.boolean_property_aggregation {
        check_property(&a.property_name, Some(PropertyType::Boolean));
    }
    if let Some(g) = &query.groupby_property {
        check_property(g, None);
    }

    if errors.is_empty() {
        Ok(ValidatedQuery { query: query.clone(), collection: collection.clone() })
    } else {
        Err(errors)
    }
}

fn normalize_free_text(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes the free-text fields so equality comparison is well defined:
/// the search query is case-folded and whitespace-collapsed, text filter
/// values are trimmed. Structured fields are untouched. Idempotent.
pub fn canonicalize(query: &QueryRequest) -> QueryRequest {
    let mut out = query.clone();
    if let Some(sq) = &out.search_query {
        out.search_query = Some(normalize_free_text(sq));
    }
    if let Some(f) = &mut out.text_property_filter {
        f.value = f.value.trim().to_string();
    }
    out
}

/// Buckets a query by its optional-argument count: 1 is SIMPLE, 2 is
/// MODERATE, 3 or more is COMPLEX.
pub fn complexity(query: &QueryRequest) -> Result<ComplexityBucket, QueryModelError> {
    match query.optional_argument_count() {
        0 => Err(QueryModelError::DegenerateQuery),
        1 => Ok(ComplexityBucket::Simple),
        2 => Ok(ComplexityBucket::Moderate),
        _ => Ok(ComplexityBucket::Complex),
    }
}

/// Maps a query to its operator-combination tuple. Ground-truth queries
/// carry at most one filter and one aggregation; anything else errors here.
pub fn operator_signature(query: &QueryRequest) -> Result<CombinationId, QueryModelError> {
    if query.filter_slot_count() > 1 {
        return Err(QueryModelError::MultipleFiltersPresent);
    }
    if query.aggregation_slot_count() > 1 {
        return Err(QueryModelError::MultipleAggregationsPresent);
    }
    let filter = if query.integer_property_filter.is_some() {
        SlotKind::Int
    } else if query.text_property_filter.is_some() {
        SlotKind::Text
    } else if query.boolean_property_filter.is_some() {
        SlotKind::Bool
    } else {
        SlotKind::None
    };
    let aggregation = if query.integer_property_aggregation.is_some() {
        SlotKind::Int
    } else if query.text_property_aggregation.is_some() {
        SlotKind::Text
    } else if query.boolean_property_aggregation.is_some() {
        SlotKind::Bool
    } else {
        SlotKind::None
    };
    Ok(CombinationId {
        search: query.search_query.is_some(),
        filter,
        aggregation,
        groupby: query.groupby_property.is_some(),
    })
}

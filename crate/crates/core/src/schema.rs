//! Use-case and collection schema definitions, validation against the
//! structural conventions, and rendering of the collections description
//! string embedded in tool definitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum token budget accepted by [`render_description`].
pub const MIN_TOKEN_BUDGET: usize = 64;

/// Default description budget: the strictest function-calling SDK limit
/// observed across providers.
pub const DEFAULT_DESCRIPTION_BUDGET: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropertyType {
    #[serde(rename = "TEXT")]
    Text,
    #[serde(rename = "NUMBER")]
    Number,
    #[serde(rename = "BOOLEAN")]
    Boolean,
}

impl PropertyType {
    pub fn as_str(&self) -> &'static str {
        match self {
            PropertyType::Text => "TEXT",
            PropertyType::Number => "NUMBER",
            PropertyType::Boolean => "BOOLEAN",
        }
    }
}

impl std::fmt::Display for PropertyType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySchema {
    pub name: String,
    pub data_type: PropertyType,
    pub description: String,
    pub searchable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSchema {
    pub name: String,
    pub properties: Vec<PropertySchema>,
}

impl CollectionSchema {
    pub fn property(&self, name: &str) -> Option<&PropertySchema> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// The single property flagged as rich searchable content.
    pub fn searchable_property(&self) -> Option<&PropertySchema> {
        self.properties.iter().find(|p| p.searchable)
    }

    pub fn properties_of_type(&self, ty: PropertyType) -> impl Iterator<Item = &PropertySchema> {
        self.properties.iter().filter(move |p| p.data_type == ty)
    }
}

/// A business domain with a fixed number of interrelated collections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UseCase {
    pub use_case_overview: String,
    pub collections: Vec<CollectionSchema>,
}

impl UseCase {
    pub fn collection(&self, name: &str) -> Option<&CollectionSchema> {
        self.collections.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("use case serializes")
    }
}

/// Structural requirements a use case must satisfy. The counts are data,
/// not code: callers may vary them to produce differently shaped schemas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyProfile {
    pub collections: usize,
    pub text_properties: usize,
    pub number_properties: usize,
    pub boolean_properties: usize,
}

impl Default for PropertyProfile {
    fn default() -> Self {
        Self {
            collections: 3,
            text_properties: 2,
            number_properties: 1,
            boolean_properties: 1,
        }
    }
}

impl PropertyProfile {
    pub fn properties_per_collection(&self) -> usize {
        self.text_properties + self.number_properties + self.boolean_properties
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("failed to parse use-case document: {0}")]
    Parse(String),
    #[error("schema violation in {scope}: {detail}")]
    Violation { scope: String, detail: String },
    #[error("description budget exceeded: estimated {estimated} tokens > budget {budget}")]
    BudgetExceeded { estimated: usize, budget: usize },
    #[error("token budget {budget} below minimum {minimum}")]
    BudgetBelowMinimum { budget: usize, minimum: usize },
}

/// Estimates how many tokens a provider tokenizer would produce for `text`.
/// Pluggable so a provider-exact tokenizer can replace the default.
pub trait TokenEstimator {
    fn estimate(&self, text: &str) -> usize;
}

/// Default estimator: tokens ~= ceil(character_count / 4).
#[derive(Debug, Default, Clone, Copy)]
pub struct CharEstimator;

impl TokenEstimator for CharEstimator {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// Parses a serialized use-case document and validates it against the
/// default property profile.
pub fn load_use_case(document: &str) -> Result<UseCase, SchemaError> {
    load_use_case_with_profile(document, &PropertyProfile::default())
}

pub fn load_use_case_with_profile(
    document: &str,
    profile: &PropertyProfile,
) -> Result<UseCase, SchemaError> {
    let use_case: UseCase =
        serde_json::from_str(document).map_err(|e| SchemaError::Parse(e.to_string()))?;
    validate_use_case(&use_case, profile)?;
    Ok(use_case)
}

/// Checks every structural invariant, naming the offending collection or
/// property in the error.
pub fn validate_use_case(use_case: &UseCase, profile: &PropertyProfile) -> Result<(), SchemaError> {
    if use_case.collections.len() != profile.collections {
        return Err(SchemaError::Violation {
            scope: "use case".into(),
            detail: format!(
                "expected {} collections, found {}",
                profile.collections,
                use_case.collections.len()
            ),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for collection in &use_case.collections {
        if collection.name.is_empty() {
            return Err(SchemaError::Violation {
                scope: "use case".into(),
                detail: "collection with empty name".into(),
            });
        }
        if !seen.insert(collection.name.clone()) {
            return Err(SchemaError::Violation {
                scope: collection.name.clone(),
                detail: "duplicate collection name".into(),
            });
        }
        validate_collection(collection, profile)?;
    }
    Ok(())
}

fn validate_collection(
    collection: &CollectionSchema,
    profile: &PropertyProfile,
) -> Result<(), SchemaError> {
    let violation = |detail: String| SchemaError::Violation {
        scope: collection.name.clone(),
        detail,
    };
    let mut names = std::collections::HashSet::new();
    for prop in &collection.properties {
        if prop.name.is_empty() {
            return Err(violation("property with empty name".into()));
        }
        if !names.insert(prop.name.clone()) {
            return Err(violation(format!("duplicate property name '{}'", prop.name)));
        }
    }
    let count_of = |ty: PropertyType| collection.properties_of_type(ty).count();
    let checks = [
        (PropertyType::Text, profile.text_properties),
        (PropertyType::Number, profile.number_properties),
        (PropertyType::Boolean, profile.boolean_properties),
    ];
    for (ty, expected) in checks {
        let found = count_of(ty);
        if found != expected {
            return Err(violation(format!(
                "expected {expected} {ty} properties, found {found}"
            )));
        }
    }
    let searchable: Vec<_> = collection.properties.iter().filter(|p| p.searchable).collect();
    match searchable.as_slice() {
        [only] if only.data_type == PropertyType::Text => Ok(()),
        [only] => Err(violation(format!(
            "searchable property '{}' has type {}, expected TEXT",
            only.name, only.data_type
        ))),
        [] => Err(violation("no searchable property".into())),
        many => Err(violation(format!(
            "{} searchable properties, expected exactly one",
            many.len()
        ))),
    }
}

/// Collection names in declaration order; used verbatim as the routing enum.
pub fn collection_names(use_case: &UseCase) -> Vec<String> {
    use_case.collections.iter().map(|c| c.name.clone()).collect()
}

/// Renders a human-readable description of every collection and property,
/// fitting the estimated token count within `token_budget`.
pub fn render_description(use_case: &UseCase, token_budget: usize) -> Result<String, SchemaError> {
    render_description_with(use_case, token_budget, &CharEstimator)
}

/// When over budget, property descriptions are elided first, then the
/// use-case overview; names and types are never dropped.
pub fn render_description_with(
    use_case: &UseCase,
    token_budget: usize,
    estimator: &dyn TokenEstimator,
) -> Result<String, SchemaError> {
    if token_budget < MIN_TOKEN_BUDGET {
        return Err(SchemaError::BudgetBelowMinimum {
            budget: token_budget,
            minimum: MIN_TOKEN_BUDGET,
        });
    }
    let mut last_estimate = 0;
    for (with_prop_descriptions, with_overview) in [(true, true), (false, true), (false, false)] {
        let text = render_collections(
            &use_case.collections,
            if with_overview { Some(&use_case.use_case_overview) } else { None },
            with_prop_descriptions,
        );
        last_estimate = estimator.estimate(&text);
        if last_estimate <= token_budget {
            return Ok(text);
        }
    }
    Err(SchemaError::BudgetExceeded {
        estimated: last_estimate,
        budget: token_budget,
    })
}

pub(crate) fn render_collections(
    collections: &[CollectionSchema],
    overview: Option<&str>,
    with_prop_descriptions: bool,
) -> String {
    let mut out = String::new();
    if let Some(overview) = overview {
        if !overview.is_empty() {
            out.push_str(overview);
            out.push_str("\n\n");
        }
    }
    for collection in collections {
        out.push_str("Collection: ");
        out.push_str(&collection.name);
        out.push('\n');
        for prop in &collection.properties {
            let marker = if prop.searchable { ", searchable" } else { "" };
            if with_prop_descriptions && !prop.description.is_empty() {
                out.push_str(&format!(
                    "  - {} ({}{}): {}\n",
                    prop.name, prop.data_type, marker, prop.description
                ));
            } else {
                out.push_str(&format!("  - {} ({}{})\n", prop.name, prop.data_type, marker));
            }
        }
    }
    out.trim_end().to_string()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// The restaurant use case used across module tests.
    pub fn restaurant_use_case() -> UseCase {
        let doc = r#"{
          "use_case_overview": "A restaurant management system covering venues, their menus, and table reservations.",
          "collections": [
            {
              "name": "Restaurants",
              "properties": [
                {"name": "name", "data_type": "TEXT", "description": "The name of the restaurant.", "searchable": false},
                {"name": "description", "data_type": "TEXT", "description": "Ambiance, cuisine, and distinguishing features.", "searchable": true},
                {"name": "averageRating", "data_type": "NUMBER", "description": "Average customer rating.", "searchable": false},
                {"name": "openNow", "data_type": "BOOLEAN", "description": "Whether the restaurant is currently open.", "searchable": false}
              ]
            },
            {
              "name": "Menus",
              "properties": [
                {"name": "menuItem", "data_type": "TEXT", "description": "Name of the menu item.", "searchable": false},
                {"name": "itemDescription", "data_type": "TEXT", "description": "Ingredients and preparation details.", "searchable": true},
                {"name": "price", "data_type": "NUMBER", "description": "Item price in dollars.", "searchable": false},
                {"name": "isVegetarian", "data_type": "BOOLEAN", "description": "Whether the item is vegetarian.", "searchable": false}
              ]
            },
            {
              "name": "Reservations",
              "properties": [
                {"name": "reservationName", "data_type": "TEXT", "description": "Name the reservation is held under.", "searchable": false},
                {"name": "notes", "data_type": "TEXT", "description": "Free-form notes about the booking.", "searchable": true},
                {"name": "partySize", "data_type": "NUMBER", "description": "Number of guests.", "searchable": false},
                {"name": "confirmed", "data_type": "BOOLEAN", "description": "Whether the reservation is confirmed.", "searchable": false}
              ]
            }
          ]
        }"#;
        load_use_case(doc).expect("fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::restaurant_use_case;
    use super::*;

    #[test]
    fn loads_valid_restaurant_use_case() {
        let uc = restaurant_use_case();
        assert_eq!(uc.collections.len(), 3);
        assert_eq!(uc.collections[1].name, "Menus");
        assert_eq!(
            uc.collections[1].searchable_property().unwrap().name,
            "itemDescription"
        );
    }

    #[test]
    fn rejects_two_number_properties() {
        let mut uc = restaurant_use_case();
        uc.collections[1].properties[1] = PropertySchema {
            name: "calories".into(),
            data_type: PropertyType::Number,
            description: "Calorie count.".into(),
            searchable: false,
        };
        let doc = uc.to_json();
        let err = load_use_case(&doc).unwrap_err();
        match err {
            SchemaError::Violation { scope, .. } => assert_eq!(scope, "Menus"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_searchable_property() {
        let mut uc = restaurant_use_case();
        for p in &mut uc.collections[0].properties {
            p.searchable = false;
        }
        let err = validate_use_case(&uc, &PropertyProfile::default()).unwrap_err();
        match err {
            SchemaError::Violation { scope, detail } => {
                assert_eq!(scope, "Restaurants");
                assert!(detail.contains("searchable"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_property_names() {
        let mut uc = restaurant_use_case();
        uc.collections[2].properties[0].name = "notes".into();
        assert!(validate_use_case(&uc, &PropertyProfile::default()).is_err());
    }

    #[test]
    fn serialize_then_load_is_identity() {
        let uc = restaurant_use_case();
        let reloaded = load_use_case(&uc.to_json()).unwrap();
        assert_eq!(uc, reloaded);
    }

    #[test]
    fn collection_names_in_declaration_order() {
        let names = collection_names(&restaurant_use_case());
        assert_eq!(names, vec!["Restaurants", "Menus", "Reservations"]);
    }

    #[test]
    fn full_rendering_lists_every_name() {
        let uc = restaurant_use_case();
        let text = render_description(&uc, DEFAULT_DESCRIPTION_BUDGET).unwrap();
        for collection in &uc.collections {
            assert!(text.contains(&collection.name), "missing {}", collection.name);
            for prop in &collection.properties {
                assert!(text.contains(&prop.name), "missing {}", prop.name);
            }
        }
        assert!(text.contains("A restaurant management system"));
    }

    #[test]
    fn generous_budget_keeps_property_descriptions() {
        let text = render_description(&restaurant_use_case(), 10_000).unwrap();
        assert!(text.contains("Ambiance, cuisine"));
    }

    #[test]
    fn tight_budget_truncates_or_errors_verifiably() {
        let uc = restaurant_use_case();
        let estimator = CharEstimator;
        match render_description(&uc, 80) {
            Ok(text) => assert!(estimator.estimate(&text) <= 80),
            Err(SchemaError::BudgetExceeded { estimated, budget }) => {
                assert_eq!(budget, 80);
                assert!(estimated > 80);
            }
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn budget_below_minimum_is_rejected() {
        let err = render_description(&restaurant_use_case(), 10).unwrap_err();
        assert_eq!(
            err,
            SchemaError::BudgetBelowMinimum { budget: 10, minimum: MIN_TOKEN_BUDGET }
        );
    }

    #[test]
    fn rendered_estimate_fits_budget_over_random_budgets() {
        let uc = restaurant_use_case();
        let estimator = CharEstimator;
        for budget in [64, 96, 128, 200, 400, 800, 1024, 5000] {
            if let Ok(text) = render_description(&uc, budget) {
                assert!(
                    estimator.estimate(&text) <= budget,
                    "estimate exceeded budget {budget}"
                );
            }
        }
    }
}

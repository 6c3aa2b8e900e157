//! Print the built-in generic 68-point face model as a landmark JSON
//! document, ready to feed to the CLI via `--model`.
//!
//!     cargo run --example dump_model > model.json

fn main() {
    let model = facepose::GenericModel::synthetic();
    let doc = model.landmarks.to_json();
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}

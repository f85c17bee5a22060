fn main() {
    println!("beamsplit");
}

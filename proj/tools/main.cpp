#include <iostream>

int main() {
    std::cout << "omcool: placeholder\n";
    return 0;
}

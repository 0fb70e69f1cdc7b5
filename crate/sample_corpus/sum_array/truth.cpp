#include <iostream>

int main() {
    float a[10];
    float total = 0.0f;
    for (int i = 1; i <= 10; ++i) {
        a[i - 1] = static_cast<float>(i) * 0.5f;
        total += a[i - 1];
    }
    std::cout << " total =   " << total << std::endl;
    return 0;
}
